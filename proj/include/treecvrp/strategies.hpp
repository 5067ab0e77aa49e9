#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treecvrp/classify.hpp"
#include "treecvrp/common.hpp"
#include "treecvrp/rewrite.hpp"

namespace treecvrp {

struct WorkingPickup {
  Vertex leaf;
  std::int64_t amount;
};

/// One tour over the working tree: pickups in bottom-up order, the original
/// client shares consumed for them, and the accounted cost (twice the Steiner
/// weight of the visited leaves at emission time).
struct WorkingTour {
  std::vector<WorkingPickup> pickups;
  std::vector<RosterEntry> clients;
  std::int64_t cost = 0;
  std::int64_t load = 0;
};

struct TourSet {
  std::vector<WorkingTour> tours;
  std::int64_t cost = 0;
  std::int64_t delta_lb = 0;
  std::string strategy;

  std::string trace_json() const {
    nlohmann::json j;
    j["type"] = "tour_set";
    j["strategy"] = strategy;
    j["cost"] = cost;
    j["delta_lb"] = delta_lb;
    j["margin"] = 4 * delta_lb - 3 * cost;
    j["tours"] = tours.size();
    return j.dump();
  }
};

/// The 4/3 certificate in exact integers: 3*cost <= 4*delta_lb, positive
/// loads within capacity, nonempty tour list. Throws CertificateViolation
/// with full diagnostics; a violation is always an implementation bug.
inline void check_certificate(const TourSet& ts, std::int64_t capacity) {
  auto fail = [&](const std::string& why) {
    throw CertificateViolation("tour set '" + ts.strategy + "' " + why + " (cost=" + std::to_string(ts.cost) +
                               " delta_lb=" + std::to_string(ts.delta_lb) + ")");
  };
  if (ts.tours.empty()) fail("violates nonemptiness");
  for (const WorkingTour& t : ts.tours) {
    if (t.pickups.empty() || t.load <= 0) fail("contains an empty tour");
    for (const WorkingPickup& p : t.pickups)
      if (p.amount <= 0) fail("contains a non-positive pickup");
    if (t.load > capacity) fail("overloads a tour");
  }
  if (ts.delta_lb < 0) fail("has negative lower-bound reduction");
  if (3 * ts.cost > 4 * ts.delta_lb) fail("breaks the 4/3 bound");
}

namespace detail {

/// Costs the pickups, then removes their demand (consuming rosters).
inline WorkingTour emit_tour(WorkingTree& t, std::vector<WorkingPickup> pickups) {
  WorkingTour tour;
  std::vector<Vertex> vs;
  vs.reserve(pickups.size());
  for (const WorkingPickup& p : pickups) vs.push_back(p.leaf);
  tour.cost = t.steiner_cost(vs);
  for (const WorkingPickup& p : pickups) {
    tour.load += p.amount;
    auto consumed = t.remove_demand(p.leaf, p.amount);
    tour.clients.insert(tour.clients.end(), consumed.begin(), consumed.end());
  }
  tour.pickups = std::move(pickups);
  return tour;
}

inline void add_tour(TourSet& ts, WorkingTour tour) {
  ts.cost += tour.cost;
  ts.tours.push_back(std::move(tour));
}

}  // namespace detail

/// Greedy 1-approximate peel: while some leaf holds at least Q demand, a
/// direct out-and-back tour covers exactly Q of it. Per tour, cost equals the
/// lower-bound reduction exactly. Returns an empty set when nothing is heavy.
inline TourSet peel_heavy_clients(WorkingTree& t) {
  TourSet ts;
  ts.strategy = "peel";
  std::int64_t before = t.working_lb();
  for (;;) {
    Vertex heavy = kNoVertex;
    for (Vertex v : t.leaves())
      if (t.demand(v) >= t.capacity()) {
        heavy = v;
        break;
      }
    if (heavy == kNoVertex) break;
    while (t.alive(heavy) && t.demand(heavy) >= t.capacity()) {
      std::int64_t lb0 = t.working_lb();
      WorkingTour tour = detail::emit_tour(t, {{heavy, t.capacity()}});
      if (lb0 - t.working_lb() != tour.cost)
        throw InternalError("peel tour cost differs from its lower-bound reduction");
      detail::add_tour(ts, std::move(tour));
    }
  }
  ts.delta_lb = before - t.working_lb();
  if (!ts.tours.empty()) check_certificate(ts, t.capacity());
  return ts;
}

/// The p cascade tours of a chain, bottom-up: each tour covers the lowest
/// leaf with remaining demand entirely, then keeps filling from the minor
/// leaf of the lowest level that still has demand. In a simplified tree every
/// tour but the last leaves full, demand vanishes level by level, and the
/// edge traversal counts are exactly p for the stem, i for spine edge i, one
/// for each major leaf edge and two for each minor leaf edge. All of that is
/// enforced here; a violation means the branch was not a chain.
inline std::vector<WorkingTour> cascade(WorkingTree& t, const ChainLabel& label) {
  const std::int64_t q = t.capacity();
  const int p = label.p;
  struct Slot {
    Vertex leaf;
    int level;
    int rank;  // 0 spine leaf, 1 major, 2 minor
  };
  std::vector<Slot> order;
  order.push_back({label.levels[0].spine, 1, 0});
  order.push_back({label.levels[0].major, 1, 1});
  order.push_back({label.levels[0].minor, 1, 2});
  for (int i = 2; i <= p - 1; ++i) {
    order.push_back({label.levels[i - 1].major, i, 1});
    order.push_back({label.levels[i - 1].minor, i, 2});
  }
  std::vector<std::int64_t> rem(order.size());
  for (std::size_t s = 0; s < order.size(); ++s) rem[s] = t.demand(order[s].leaf);

  std::vector<WorkingTour> tours;
  for (int k = 1; k <= p; ++k) {
    int first = -1;
    for (std::size_t s = 0; s < order.size(); ++s)
      if (rem[s] > 0) {
        first = static_cast<int>(s);
        break;
      }
    if (first < 0) throw InternalError("cascade: demand ran out before tour " + std::to_string(k));
    std::vector<WorkingPickup> pickups{{order[first].leaf, rem[first]}};
    std::int64_t load = rem[first];
    rem[first] = 0;
    while (load < q) {
      int lowest = -1;
      for (std::size_t s = 0; s < order.size(); ++s)
        if (rem[s] > 0) {
          lowest = order[s].level;
          break;
        }
      if (lowest < 0) break;
      int minor = -1;
      for (std::size_t s = 0; s < order.size(); ++s)
        if (order[s].level == lowest && order[s].rank == 2) minor = static_cast<int>(s);
      if (minor < 0 || rem[minor] == 0) break;
      std::int64_t take = std::min(q - load, rem[minor]);
      pickups.push_back({order[minor].leaf, take});
      rem[minor] -= take;
      load += take;
    }
    tours.push_back(detail::emit_tour(t, std::move(pickups)));
    for (std::size_t s = 0; s < order.size(); ++s)
      if (order[s].level < k && rem[s] > 0)
        throw InternalError("cascade: demand left below level " + std::to_string(k));
  }
  for (std::int64_t r : rem)
    if (r > 0) throw InternalError("cascade: chain demand not exhausted after p tours");
  for (int k = 0; k < p - 1; ++k)
    if (tours[k].load != q) throw InternalError("cascade: tour " + std::to_string(k + 1) + " is not full");
  if (tours[p - 1].load <= 0 || tours[p - 1].load > q)
    throw InternalError("cascade: final tour load out of range");

  // Traversal counts, from the pickup sets.
  auto visits = [&](const WorkingTour& tour, Vertex leaf) {
    for (const WorkingPickup& pk : tour.pickups)
      if (pk.leaf == leaf) return true;
    return false;
  };
  auto visits_below = [&](const WorkingTour& tour, int level) {
    for (const WorkingPickup& pk : tour.pickups)
      for (const Slot& s : order)
        if (s.leaf == pk.leaf && s.level <= level) return true;
    return false;
  };
  for (int i = 1; i <= p - 1; ++i) {
    const ChainLevel& lv = label.levels[i - 1];
    int c_spine = 0, c_major = 0, c_minor = 0;
    for (const WorkingTour& tour : tours) {
      if (i == 1 ? visits(tour, lv.spine) : visits_below(tour, i - 1)) ++c_spine;
      if (visits(tour, lv.major)) ++c_major;
      if (visits(tour, lv.minor)) ++c_minor;
    }
    if (c_spine != i || c_major != 1 || c_minor != 2)
      throw InternalError("cascade: traversal counts off at level " + std::to_string(i));
  }
  return tours;
}

namespace detail {

/// Accounted cascade cost: 2(p*l(stem) + sum_i i*l(spine_i) + 2 l(minor_i) +
/// l(major_i)), not counting the path above the stem.
inline std::int64_t cascade_cost_formula(const WorkingTree& t, const ChainLabel& label) {
  std::int64_t s = label.p * t.edge_len(label.stem);
  for (int i = 1; i <= label.p - 1; ++i) {
    const ChainLevel& lv = label.levels[i - 1];
    s += i * t.edge_len(lv.spine) + 2 * t.edge_len(lv.minor) + t.edge_len(lv.major);
  }
  return 2 * s;
}

}  // namespace detail

/// Resolves a long chain hanging at the root by its cascade. The accounted
/// cost matches the closed form and the lower-bound reduction is the whole
/// branch contribution.
inline TourSet resolve_root_chain(WorkingTree& t, const ChainLabel& label) {
  if (t.parent(label.stem) != t.root()) throw Error("resolve_root_chain: stem must hang at the root");
  if (!label.long_chain) throw InternalError("resolve_root_chain: chain is short\n" + t.dump());
  std::int64_t lb0 = t.working_lb();
  std::int64_t branch = t.branch_lb(label.stem);
  std::int64_t formula = detail::cascade_cost_formula(t, label);
  TourSet ts;
  ts.strategy = "root-chain";
  for (WorkingTour& tour : cascade(t, label)) detail::add_tour(ts, std::move(tour));
  ts.delta_lb = lb0 - t.working_lb();
  if (ts.delta_lb != branch) throw InternalError("resolve_root_chain: reduction differs from branch LB");
  if (ts.cost != formula) throw InternalError("resolve_root_chain: cost differs from closed form");
  check_certificate(ts, t.capacity());
  return ts;
}

/// Resolves two sibling long chains together: both cascades in one set. The
/// exact reduction is at least the in-branch contributions plus
/// (p+p'-1) * 2 * dist(parent, root).
inline TourSet resolve_sibling_pair(WorkingTree& t, const ChainLabel& a, const ChainLabel& b) {
  Vertex u = t.parent(a.stem);
  if (u != t.parent(b.stem) || a.stem == b.stem) throw Error("resolve_sibling_pair: stems must share a parent");
  if (!a.long_chain || !b.long_chain) throw InternalError("resolve_sibling_pair: both chains must be long\n" + t.dump());
  std::int64_t path = t.dist_to_root(u);
  std::int64_t lb0 = t.working_lb();
  std::int64_t branches = t.branch_lb(a.stem) + t.branch_lb(b.stem);
  std::int64_t formula_cost =
      detail::cascade_cost_formula(t, a) + detail::cascade_cost_formula(t, b) + 2 * path * (a.p + b.p);
  TourSet ts;
  ts.strategy = "sibling-pair";
  for (WorkingTour& tour : cascade(t, a)) detail::add_tour(ts, std::move(tour));
  for (WorkingTour& tour : cascade(t, b)) detail::add_tour(ts, std::move(tour));
  ts.delta_lb = lb0 - t.working_lb();
  if (ts.cost != formula_cost) throw InternalError("resolve_sibling_pair: cost differs from closed form");
  std::int64_t accounted = branches + 2 * path * (a.p + b.p - 1);
  if (ts.delta_lb < accounted) throw InternalError("resolve_sibling_pair: reduction below the accounting bound");
  check_certificate(ts, t.capacity());
  return ts;
}

/// Resolves a minimally unsettled branch with at least three leaf children.
/// With a = dist(branch vertex, root) and the three longest leaf edges
/// w_a >= w_b >= w_c: if a <= w_a+w_b+w_c, three single-leaf tours empty
/// them; otherwise one full tour covers the longest-edge leaf entirely and
/// tops up from the shortest-edge leaf.
inline TourSet resolve_trident(WorkingTree& t, Vertex v0) {
  const std::int64_t q = t.capacity();
  std::vector<Vertex> leaves;
  for (Vertex c : t.children(v0))
    if (t.is_leaf(c)) leaves.push_back(c);
  if (leaves.size() < 3) throw Error("resolve_trident: needs three leaf children");
  detail::sort_by_len_desc(t, leaves);
  Vertex la = leaves[0], lb = leaves[1], lc = leaves[2];
  std::int64_t wa = t.edge_len(la), wb = t.edge_len(lb), wc = t.edge_len(lc);
  std::int64_t a = t.dist_to_root(v0);
  std::int64_t triple = t.demand(la) + t.demand(lb) + t.demand(lc);
  if (triple < 2 * q)
    throw InternalError("resolve_trident: triple demand below 2Q, group/unite not exhausted\n" + t.dump());
  std::int64_t lb0 = t.working_lb();
  TourSet ts;
  ts.strategy = "trident";
  std::int64_t accounted;
  if (a <= wa + wb + wc) {
    for (Vertex leaf : {la, lb, lc}) detail::add_tour(ts, detail::emit_tour(t, {{leaf, t.demand(leaf)}}));
    accounted = 2 * (2 * a + wa + wb + wc);
  } else {
    std::int64_t fill = q - t.demand(la);
    if (fill <= 0 || fill >= t.demand(lc))
      throw InternalError("resolve_trident: fill amount out of range (unite not exhausted)");
    detail::add_tour(ts, detail::emit_tour(t, {{la, t.demand(la)}, {lc, fill}}));
    accounted = 2 * (a + wa);
  }
  ts.delta_lb = lb0 - t.working_lb();
  if (ts.delta_lb < accounted) throw InternalError("resolve_trident: reduction below the accounting bound");
  check_certificate(ts, t.capacity());
  return ts;
}

/// Resolves a short chain by emptying its two top-level leaves with one tour
/// each. Shortness (minor length >= distance to root) is exactly what makes
/// the two detours affordable.
inline TourSet resolve_short_chain(WorkingTree& t, const ChainLabel& label) {
  if (label.long_chain) throw InternalError("resolve_short_chain: chain is long");
  const ChainLevel& top = label.levels[label.p - 2];
  std::int64_t a = t.dist_to_root(label.stem);
  std::int64_t b = t.edge_len(top.minor);
  std::int64_t c = t.edge_len(top.major);
  if (b < a) throw InternalError("resolve_short_chain: top level is not the short one\n" + t.dump());
  std::int64_t lb0 = t.working_lb();
  TourSet ts;
  ts.strategy = "short-chain";
  detail::add_tour(ts, detail::emit_tour(t, {{top.major, t.demand(top.major)}}));
  detail::add_tour(ts, detail::emit_tour(t, {{top.minor, t.demand(top.minor)}}));
  ts.delta_lb = lb0 - t.working_lb();
  if (ts.cost != 2 * (2 * a + b + c)) throw InternalError("resolve_short_chain: cost differs from closed form");
  if (ts.delta_lb < 2 * (a + b + c)) throw InternalError("resolve_short_chain: reduction below the accounting bound");
  check_certificate(ts, t.capacity());
  return ts;
}

/// A 1-branch at the root resolves by one tour at ratio exactly one.
inline TourSet resolve_root_one_branch(WorkingTree& t, Vertex leaf) {
  if (t.parent(leaf) != t.root()) throw Error("resolve_root_one_branch: stem must hang at the root");
  if (!t.is_leaf(leaf) || t.traffic(leaf) != 1)
    throw InternalError("resolve_root_one_branch: branch is not a single leaf edge\n" + t.dump());
  std::int64_t lb0 = t.working_lb();
  TourSet ts;
  ts.strategy = "root-1-branch";
  detail::add_tour(ts, detail::emit_tour(t, {{leaf, t.demand(leaf)}}));
  ts.delta_lb = lb0 - t.working_lb();
  if (ts.delta_lb != ts.cost) throw InternalError("resolve_root_one_branch: cost differs from reduction");
  check_certificate(ts, t.capacity());
  return ts;
}

}  // namespace treecvrp
