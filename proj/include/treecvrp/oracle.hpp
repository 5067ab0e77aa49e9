#pragma once

#include <algorithm>
#include <unordered_map>
#include <vector>

#include "treecvrp/common.hpp"
#include "treecvrp/instance.hpp"

namespace treecvrp {

/// The instance with every client expanded into unit demand granules.
struct GranuleInstance {
  std::vector<Vertex> owner;  // granule index -> client vertex
  std::int64_t limit = 10;

  static GranuleInstance from(const Instance& inst, std::int64_t limit = 10) {
    GranuleInstance g;
    g.limit = limit;
    if (limit > 16) throw Error("granule limit too large (max 16)");
    if (inst.total_demand() > limit)
      throw Error("granule limit exceeded: " + std::to_string(inst.total_demand()) + " > " +
                  std::to_string(limit));
    for (Vertex v = 0; v < inst.size(); ++v)
      for (std::int64_t i = 0; i < inst.demand(v); ++i) g.owner.push_back(v);
    return g;
  }
};

namespace detail {

struct OracleDp {
  std::vector<std::int64_t> best;
  std::vector<std::uint32_t> pick;
  std::vector<Vertex> owner;

  explicit OracleDp(const Instance& inst, const GranuleInstance& g) : owner(g.owner) {
    int n = static_cast<int>(owner.size());
    std::uint32_t full = n == 0 ? 0 : (1u << n) - 1;
    best.assign(static_cast<std::size_t>(full) + 1, -1);
    pick.assign(best.size(), 0);
    best[0] = 0;
    // Cost depends only on the set of distinct clients in a block; key blocks
    // by an exact client-index mask.
    std::vector<Vertex> distinct = owner;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> client_index(n);
    for (int i = 0; i < n; ++i)
      client_index[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), owner[i]) -
                                         distinct.begin());
    std::unordered_map<std::uint32_t, std::int64_t> block_cost;
    auto cost_of = [&](std::uint32_t sub) {
      std::uint32_t key = 0;
      for (int i = 0; i < n; ++i)
        if (sub & (1u << i)) key |= 1u << client_index[i];
      auto it = block_cost.find(key);
      if (it != block_cost.end()) return it->second;
      std::vector<Vertex> clients;
      for (std::size_t ci = 0; ci < distinct.size(); ++ci)
        if (key & (1u << ci)) clients.push_back(distinct[ci]);
      std::int64_t c = inst.tour_cost(clients);
      block_cost.emplace(key, c);
      return c;
    };
    std::int64_t q = inst.capacity();
    for (std::uint32_t mask = 1; mask <= full && full; ++mask) {
      int low = __builtin_ctz(mask);
      std::uint32_t lowbit = 1u << low;
      // Enumerate blocks containing the lowest granule (canonical partition).
      for (std::uint32_t sub = mask; sub; sub = (sub - 1) & mask) {
        if (!(sub & lowbit)) continue;
        if (__builtin_popcount(sub) > q) continue;
        std::int64_t candidate = best[mask ^ sub];
        if (candidate < 0) continue;
        candidate += cost_of(sub);
        if (best[mask] < 0 || candidate < best[mask]) {
          best[mask] = candidate;
          pick[mask] = sub;
        }
      }
    }
  }
};

}  // namespace detail

/// Exact optimum over integral demand splits, by exhaustive partition of the
/// granules into blocks of at most Q. Documented as an upper bound on the
/// true optimum; together with LB <= exact_opt it sandwiches the solver.
inline std::int64_t exact_opt(const Instance& inst, std::int64_t limit = 10) {
  GranuleInstance g = GranuleInstance::from(inst, limit);
  if (g.owner.empty()) return 0;
  detail::OracleDp dp(inst, g);
  return dp.best.back();
}

/// Same enumeration, with the partition recovered as a Solution document.
inline Solution oracle_solution(const Instance& inst, std::int64_t limit = 10) {
  GranuleInstance g = GranuleInstance::from(inst, limit);
  Solution sol;
  sol.lower_bound = inst.lower_bound();
  if (g.owner.empty()) return sol;
  detail::OracleDp dp(inst, g);
  std::uint32_t mask = static_cast<std::uint32_t>(dp.best.size() - 1);
  sol.cost = dp.best[mask];
  while (mask) {
    std::uint32_t block = dp.pick[mask];
    Tour t;
    for (int i = 0; i < static_cast<int>(g.owner.size()); ++i)
      if (block & (1u << i)) t[inst.name(g.owner[i])] += 1;
    sol.tours.push_back(std::move(t));
    mask ^= block;
  }
  std::reverse(sol.tours.begin(), sol.tours.end());
  return sol;
}

/// Iterated tour partitioning: clients in depth-first order, greedily cut
/// into capacity-full segments (splitting a client across a cut), one tour
/// per segment.
inline Solution itp_baseline(const Instance& inst) {
  Solution sol;
  sol.lower_bound = inst.lower_bound();
  std::vector<Vertex> stack{inst.depot()}, dfs;
  while (!stack.empty()) {
    Vertex v = stack.back();
    stack.pop_back();
    dfs.push_back(v);
    const auto& ch = inst.children(v);
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  Tour current;
  std::int64_t load = 0;
  auto flush = [&]() {
    if (!current.empty()) {
      std::vector<Vertex> clients;
      for (const auto& [name, amount] : current) clients.push_back(inst.id(name));
      sol.cost += inst.tour_cost(clients);
      sol.tours.push_back(std::move(current));
      current.clear();
    }
    load = 0;
  };
  for (Vertex v : dfs) {
    std::int64_t d = inst.demand(v);
    while (d > 0) {
      std::int64_t take = std::min(d, inst.capacity() - load);
      current[inst.name(v)] += take;
      d -= take;
      load += take;
      if (load == inst.capacity()) flush();
    }
  }
  flush();
  return sol;
}

}  // namespace treecvrp
