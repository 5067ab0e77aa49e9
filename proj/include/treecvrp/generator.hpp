#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treecvrp/common.hpp"
#include "treecvrp/instance.hpp"

namespace treecvrp {

enum class Shape { RandomTree, Caterpillar, ChainStack };

inline const char* shape_name(Shape s) {
  switch (s) {
    case Shape::RandomTree: return "random-tree";
    case Shape::Caterpillar: return "caterpillar";
    case Shape::ChainStack: return "chain-stack";
  }
  return "?";
}

inline std::optional<Shape> shape_from_name(const std::string& s) {
  if (s == "random-tree") return Shape::RandomTree;
  if (s == "caterpillar") return Shape::Caterpillar;
  if (s == "chain-stack") return Shape::ChainStack;
  return std::nullopt;
}

struct GenParams {
  int n = 20;
  std::int64_t max_len = 20;
  std::int64_t max_demand = 15;
  std::int64_t capacity = 10;
  std::uint64_t seed = 1;
  Shape shape = Shape::RandomTree;

  void validate() const {
    if (n < 1) throw Error("gen: n must be >= 1");
    if (capacity < 1) throw Error("gen: capacity must be >= 1");
    if (max_len < 0) throw Error("gen: max edge length must be >= 0");
    if (max_demand < 1 || max_demand > 3 * capacity)
      throw Error("gen: max demand must be in [1, 3Q]");
  }
};

namespace detail {

struct GenBuilder {
  std::vector<Instance::EdgeSpec> edges;
  std::map<std::string, std::int64_t> demands;
  int width;

  explicit GenBuilder(int n) {
    width = 1;
    for (int x = n; x >= 10; x /= 10) ++width;
  }

  std::string vname(int i) const {
    std::string s = std::to_string(i);
    return "v" + std::string(width - std::min<int>(width, s.size()), '0') + s;
  }

  void edge(const std::string& parent, const std::string& child, std::int64_t len) {
    edges.push_back({parent, child, len});
  }
};

inline Instance gen_random_tree(const GenParams& p, SplitMix64& rng) {
  GenBuilder b(p.n);
  std::vector<std::string> names{"r"};
  std::vector<char> has_child(p.n, 0);
  for (int i = 1; i < p.n; ++i) {
    std::string name = b.vname(i);
    std::int64_t parent = rng.range(0, static_cast<std::int64_t>(names.size()) - 1);
    b.edge(names[parent], name, rng.range(0, p.max_len));
    has_child[parent] = 1;
    names.push_back(name);
  }
  for (int i = 1; i < p.n; ++i) {
    if (!has_child[i])
      b.demands[names[i]] = rng.range(1, p.max_demand);
    else if (rng.chance(1, 4))
      b.demands[names[i]] = rng.range(1, p.max_demand);
  }
  if (rng.chance(1, 8)) b.demands["r"] = rng.range(1, p.max_demand);
  return Instance::build("r", p.capacity, b.edges, b.demands);
}

inline Instance gen_caterpillar(const GenParams& p, SplitMix64& rng) {
  GenBuilder b(p.n);
  int spine = std::max<int>(1, std::min(p.n - 1, p.n / 2));
  std::vector<std::string> spine_names{"r"};
  for (int i = 1; i <= spine; ++i) {
    std::string name = b.vname(i);
    b.edge(spine_names.back(), name, rng.range(0, p.max_len));
    spine_names.push_back(name);
  }
  for (int i = spine + 1; i < p.n; ++i) {
    std::string name = b.vname(i);
    const std::string& at = spine_names[rng.range(1, spine)];
    b.edge(at, name, rng.range(0, p.max_len));
    b.demands[name] = rng.range(1, p.max_demand);
  }
  // The spine tip is a leaf unless a leg landed on it; give it demand anyway
  // (internal demand exercises normalization).
  b.demands[spine_names.back()] = rng.range(1, p.max_demand);
  for (int i = 1; i < spine; ++i)
    if (rng.chance(1, 5)) b.demands[b.vname(i)] = rng.range(1, p.max_demand);
  return Instance::build("r", p.capacity, b.edges, b.demands);
}

/// Nested chain: a spine r -> s_p -> ... -> s_2, three leaves under s_2 and
/// two per level above, with demands chosen so no safe operation applies and
/// every cascade tour but the last leaves full. Levels come out long unless
/// the seed spices one level short (seed % 5 == 0).
inline Instance gen_chain_stack(const GenParams& p, SplitMix64& rng) {
  const std::int64_t q = p.capacity;
  if (q < 6 || p.n < 5 || p.max_len < 2) return gen_random_tree(p, rng);
  GenBuilder b(p.n);
  int target_p = std::max(2, (p.n + 1) / 3);
  bool spice_short = p.seed % 5 == 0;
  int short_level = spice_short && target_p >= 3 ? static_cast<int>(rng.range(2, target_p - 1)) : -1;

  // Spine, top-down; distances to the root are known as we descend.
  std::vector<std::string> spine(target_p + 1);
  std::vector<std::int64_t> dist(target_p + 1, 0);  // dist[i] = root distance of s_i
  int next_id = 1;
  std::string parent = "r";
  std::int64_t acc = 0;
  for (int i = target_p; i >= 2; --i) {
    spine[i] = b.vname(next_id++);
    std::int64_t len = rng.range(1, p.max_len);
    b.edge(parent, spine[i], len);
    acc += len;
    dist[i] = acc;
    parent = spine[i];
  }

  auto leaf_pair_lengths = [&](int level, std::int64_t& major, std::int64_t& minor) {
    std::int64_t d_above = dist[level + 1];
    if (level == short_level && d_above <= p.max_len - 1) {
      minor = rng.range(d_above, p.max_len - 1);  // >= distance: short level
    } else {
      minor = rng.range(0, std::min(p.max_len - 1, std::max<std::int64_t>(0, d_above - 1)));
    }
    major = rng.range(minor + 1, std::max(minor + 1, p.max_len));
  };

  // Bottom level: three leaves, pairwise sums above Q, total in (1.5Q, 2Q].
  std::int64_t lo = q / 2 + 1, hi = std::max(lo, 2 * q / 3);
  std::int64_t d0 = rng.range(lo, hi), d1 = rng.range(lo, hi), d2 = rng.range(lo, hi);
  std::int64_t total = d0 + d1 + d2;
  {
    std::vector<std::int64_t> ls = {rng.range(0, p.max_len), rng.range(0, p.max_len), rng.range(0, p.max_len)};
    std::sort(ls.rbegin(), ls.rend());
    for (std::int64_t d : {d0, d1, d2}) {
      std::string leaf = b.vname(next_id++);
      b.edge(spine[2], leaf, ls[0]);
      ls.erase(ls.begin());
      b.demands[leaf] = d;
    }
  }

  // Upper levels, bottom-up. Both leaf demands stay above the slide margin
  // (total + d > level*Q) so the chain survives simplification intact.
  for (int i = 2; i <= target_p - 1; ++i) {
    std::int64_t margin = static_cast<std::int64_t>(i) * q - total + 1;
    std::int64_t lo2 = std::max<std::int64_t>(1, margin), hi2 = q - 1;
    if (lo2 > hi2) break;
    std::int64_t d_minor = rng.range(lo2, hi2);
    std::int64_t smax = std::min(3 * q / 2, (i + 1) * q - total - 1);
    std::int64_t lo1 = std::max(std::max<std::int64_t>(1, margin), q + 1 - d_minor);
    std::int64_t hi1 = std::min(q - 1, smax - d_minor);
    if (lo1 > hi1) break;
    std::int64_t d_major = rng.range(lo1, hi1);
    std::int64_t len_major, len_minor;
    leaf_pair_lengths(i, len_major, len_minor);
    std::string leaf_major = b.vname(next_id++), leaf_minor = b.vname(next_id++);
    b.edge(spine[i + 1], leaf_major, len_major);
    b.edge(spine[i + 1], leaf_minor, len_minor);
    b.demands[leaf_major] = d_major;
    b.demands[leaf_minor] = d_minor;
    total += d_major + d_minor;
  }
  return Instance::build("r", q, b.edges, b.demands);
}

}  // namespace detail

/// Deterministic instance for (params, seed): identical bytes on every run.
inline Instance generate(const GenParams& p) {
  p.validate();
  SplitMix64 rng(p.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(p.shape) + 1);
  switch (p.shape) {
    case Shape::RandomTree: return detail::gen_random_tree(p, rng);
    case Shape::Caterpillar: return detail::gen_caterpillar(p, rng);
    case Shape::ChainStack: return detail::gen_chain_stack(p, rng);
  }
  throw Error("gen: unknown shape");
}

}  // namespace treecvrp
