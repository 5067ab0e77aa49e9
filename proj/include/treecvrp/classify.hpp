#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "treecvrp/common.hpp"
#include "treecvrp/rewrite.hpp"

namespace treecvrp {

/// One level of a recognized chain. `spine` is v_i^0 (at the bottom level a
/// leaf, above it the stem vertex of the sub-chain); `major`/`minor` are the
/// two leaves v_i^1, v_i^2 with edge_len(major) >= edge_len(minor).
struct ChainLevel {
  Vertex spine;
  Vertex major;
  Vertex minor;
};

struct ChainLabel {
  int p = 0;
  Vertex stem = kNoVertex;          // v_p^0, child endpoint of the stem edge
  std::vector<ChainLevel> levels;   // levels[i-1] holds level i, i in [1, p-1]
  bool long_chain = false;
};

enum class BranchKind { OneBranch, LongChain, ShortChain, Other };

struct BranchClass {
  BranchKind kind;
  std::optional<ChainLabel> label;
};

namespace detail {

/// Orders vertices by (edge length descending, id ascending).
inline void sort_by_len_desc(const WorkingTree& t, std::vector<Vertex>& vs) {
  std::sort(vs.begin(), vs.end(), [&](Vertex a, Vertex b) {
    return std::pair(-t.edge_len(a), a) < std::pair(-t.edge_len(b), b);
  });
}

}  // namespace detail

/// True iff every level i in [2, p-1] satisfies
/// edge_len(minor_i) < dist(spine of level i+1, root), measured in the
/// current tree. 2-chains are vacuously long.
inline bool is_long(const WorkingTree& t, const ChainLabel& label) {
  for (int i = 2; i <= label.p - 1; ++i) {
    Vertex above = (i == label.p - 1) ? label.stem : label.levels[i].spine;
    if (t.edge_len(label.levels[i - 1].minor) >= t.dist_to_root(above)) return false;
  }
  return true;
}

/// Matches the branch under the stem edge (parent(v), v) against the chain
/// shape: a traffic-2 branch over exactly three leaves with pairwise sums
/// above Q and total in (1.5Q, 2Q], or recursively a traffic-p branch over a
/// (p-1)-chain plus two leaves with combined demand in (Q, 1.5Q].
inline std::optional<ChainLabel> recognize_chain(const WorkingTree& t, Vertex v) {
  const std::int64_t q = t.capacity();
  if (t.parent(v) == kNoVertex) throw Error("recognize_chain: root is not a branch");
  std::int64_t f = t.traffic(v);
  if (f < 2 || t.is_leaf(v)) return std::nullopt;
  std::vector<Vertex> ch = t.children(v);
  if (ch.size() != 3) return std::nullopt;

  ChainLabel label;
  label.stem = v;
  if (f == 2) {
    for (Vertex c : ch)
      if (!t.is_leaf(c)) return std::nullopt;
    detail::sort_by_len_desc(t, ch);
    std::int64_t d0 = t.demand(ch[0]), d1 = t.demand(ch[1]), d2 = t.demand(ch[2]);
    std::int64_t sum = d0 + d1 + d2;
    if (!(2 * sum > 3 * q && sum <= 2 * q)) return std::nullopt;
    if (d0 + d1 <= q || d0 + d2 <= q || d1 + d2 <= q) return std::nullopt;
    label.p = 2;
    label.levels.push_back({ch[0], ch[1], ch[2]});
  } else {
    std::vector<Vertex> leaves, inner;
    for (Vertex c : ch) (t.is_leaf(c) ? leaves : inner).push_back(c);
    if (inner.size() != 1 || leaves.size() != 2) return std::nullopt;
    std::int64_t pair = t.demand(leaves[0]) + t.demand(leaves[1]);
    if (!(pair > q && 2 * pair <= 3 * q)) return std::nullopt;
    auto sub = recognize_chain(t, inner[0]);
    if (!sub || sub->p != f - 1) return std::nullopt;
    detail::sort_by_len_desc(t, leaves);
    label.p = static_cast<int>(f);
    label.levels = std::move(sub->levels);
    label.levels.push_back({inner[0], leaves[0], leaves[1]});
  }
  label.long_chain = is_long(t, label);
  return label;
}

inline BranchClass classify_branch(const WorkingTree& t, Vertex stem_child) {
  if (t.traffic(stem_child) == 1) return {BranchKind::OneBranch, std::nullopt};
  auto label = recognize_chain(t, stem_child);
  if (!label) return {BranchKind::Other, std::nullopt};
  BranchKind k = label->long_chain ? BranchKind::LongChain : BranchKind::ShortChain;
  return {k, std::move(label)};
}

/// A branch is settled when it is a 1-branch or a long chain.
inline bool is_settled(const WorkingTree& t, Vertex stem_child) {
  BranchClass c = classify_branch(t, stem_child);
  return c.kind == BranchKind::OneBranch || c.kind == BranchKind::LongChain;
}

/// Deepest-first search for an unsettled branch whose child branches are all
/// settled. Empty iff every branch in the tree is settled. Runs as one
/// bottom-up sweep (chain shape and longness propagate from children).
inline std::optional<Vertex> find_minimally_unsettled(const WorkingTree& t) {
  struct Info {
    bool chain = false;
    std::int64_t p = 0;
    bool long_chain = false;
    bool settled = false;
  };
  std::vector<Vertex> order = t.post_order();
  std::vector<Info> info(t.node_count());
  std::vector<std::int64_t> dist(t.node_count(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Vertex v = *it;
    dist[v] = v == t.root() ? 0 : dist[t.parent(v)] + t.edge_len(v);
  }
  const std::int64_t q = t.capacity();
  std::optional<Vertex> found;
  for (Vertex v : order) {
    if (v == t.root()) continue;
    Info& in = info[v];
    std::int64_t f = t.traffic(v);
    const auto& ch = t.children(v);
    if (f >= 2 && ch.size() == 3) {
      std::vector<Vertex> leaves, inner;
      for (Vertex c : ch) (t.is_leaf(c) ? leaves : inner).push_back(c);
      if (inner.empty() && leaves.size() == 3) {
        std::int64_t d0 = t.demand(leaves[0]), d1 = t.demand(leaves[1]), d2 = t.demand(leaves[2]);
        std::int64_t sum = d0 + d1 + d2;
        if (f == 2 && 2 * sum > 3 * q && sum <= 2 * q && d0 + d1 > q && d0 + d2 > q && d1 + d2 > q) {
          in.chain = true;
          in.p = 2;
          in.long_chain = true;
        }
      } else if (inner.size() == 1 && leaves.size() == 2 && info[inner[0]].chain &&
                 info[inner[0]].p == f - 1) {
        std::int64_t pair = t.demand(leaves[0]) + t.demand(leaves[1]);
        if (pair > q && 2 * pair <= 3 * q) {
          std::int64_t minor_len = std::min(t.edge_len(leaves[0]), t.edge_len(leaves[1]));
          in.chain = true;
          in.p = f;
          in.long_chain = info[inner[0]].long_chain && minor_len < dist[v];
        }
      }
    }
    in.settled = f == 1 || (in.chain && in.long_chain);
    if (!in.settled && !found) {
      bool kids_settled = true;
      for (Vertex c : ch) kids_settled = kids_settled && info[c].settled;
      if (kids_settled) found = v;
    }
  }
  return found;
}

}  // namespace treecvrp
