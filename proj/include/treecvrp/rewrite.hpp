#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treecvrp/common.hpp"
#include "treecvrp/instance.hpp"

namespace treecvrp {

/// One (original client, remaining amount) share of a working leaf's demand.
struct RosterEntry {
  Vertex client;
  std::int64_t amount;
};

/// Replayable record of one applied rewrite.
struct OpRecord {
  enum class Kind { Splice, Condense, Unzip, Unite, Slide, Group };
  Kind kind;
  Vertex a = kNoVertex;  // primary vertex / edge child
  Vertex b = kNoVertex;
  Vertex c = kNoVertex;
  Vertex d = kNoVertex;
  Vertex created = kNoVertex;

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::Splice: return "splice";
      case Kind::Condense: return "condense";
      case Kind::Unzip: return "unzip";
      case Kind::Unite: return "unite";
      case Kind::Slide: return "slide";
      case Kind::Group: return "group";
    }
    return "?";
  }

  std::string to_json() const {
    nlohmann::json j;
    j["type"] = "op";
    j["kind"] = kind_name(kind);
    j["a"] = a;
    if (b != kNoVertex) j["b"] = b;
    if (c != kNoVertex) j["c"] = c;
    if (d != kNoVertex) j["d"] = d;
    if (created != kNoVertex) j["created"] = created;
    return j.dump();
  }
};

/// Mutable rooted tree the solver rewrites. Demand lives only on leaves, each
/// leaf carries a roster mapping its demand back to original clients, and
/// every rewrite preserves the lower bound exactly.
///
/// Handles are stable ints; removed vertices are tombstoned. New vertices are
/// appended, so replaying the op log on a copy of the initial tree recreates
/// identical handles.
class WorkingTree {
 public:
  static WorkingTree from_normalized(const NormalizedInstance& n) {
    WorkingTree t = from_normalized_allow_heavy(n);
    for (Vertex v = 0; v < t.node_count(); ++v)
      if (t.alive(v) && t.is_leaf(v) && t.demand(v) >= t.capacity())
        throw Error("leaf demand >= capacity at node " + std::to_string(v) + "; peel first");
    return t;
  }

  /// Solver entry point: tolerates leaf demand >= Q (the peel runs next).
  static WorkingTree from_normalized_allow_heavy(const NormalizedInstance& n) {
    WorkingTree t;
    t.capacity_ = n.tree.capacity();
    t.root_ = n.tree.depot();
    t.nodes_.resize(n.tree.size());
    for (Vertex v = 0; v < n.tree.size(); ++v) {
      Node& nd = t.nodes_[v];
      nd.alive = true;
      nd.parent = n.tree.parent(v);
      nd.edge_len = v == t.root_ ? 0 : n.tree.length(v);
      nd.children = n.tree.children(v);
      nd.demand = n.tree.demand(v);
      if (nd.demand > 0) {
        if (!n.tree.is_leaf(v)) throw Error("normalized instance has internal demand");
        auto it = n.leaf_client.find(v);
        if (it == n.leaf_client.end()) throw Error("normalized leaf missing roster entry");
        nd.roster.push_back({it->second, nd.demand});
      }
    }
    if (n.tree.size() > 0 && n.tree.demand(t.root_) > 0) throw Error("normalized depot has demand");
    t.initial_lb_ = t.working_lb();
    return t;
  }

  std::int64_t capacity() const { return capacity_; }
  Vertex root() const { return root_; }
  Vertex node_count() const { return static_cast<Vertex>(nodes_.size()); }
  bool alive(Vertex v) const { return v >= 0 && v < node_count() && nodes_[v].alive; }
  bool is_leaf(Vertex v) const { return at(v).children.empty(); }
  Vertex parent(Vertex v) const { return at(v).parent; }
  std::int64_t edge_len(Vertex v) const { return at(v).edge_len; }
  std::int64_t demand(Vertex v) const { return at(v).demand; }
  const std::vector<Vertex>& children(Vertex v) const { return at(v).children; }
  const std::vector<RosterEntry>& roster(Vertex v) const { return at(v).roster; }
  const std::vector<OpRecord>& op_log() const { return log_; }
  std::int64_t initial_lb() const { return initial_lb_; }

  std::int64_t subtree_demand(Vertex v) const {
    at(v);
    ensure_subtree();
    return sub_[v];
  }

  /// Traffic on the edge (parent(v), v).
  std::int64_t traffic(Vertex v) const { return ceil_div(subtree_demand(v), capacity_); }

  std::int64_t dist_to_root(Vertex v) const {
    std::int64_t d = 0;
    for (Vertex u = v; u != root_; u = at(u).parent) d += at(u).edge_len;
    return d;
  }

  std::int64_t working_lb() const {
    std::int64_t lb = 0;
    for (Vertex v : post_order())
      if (v != root_) lb += 2 * at(v).edge_len * traffic(v);
    return lb;
  }

  /// LB contribution of the branch with stem (parent(v), v).
  std::int64_t branch_lb(Vertex v) const {
    std::int64_t lb = 2 * at(v).edge_len * traffic(v);
    for (Vertex c : at(v).children) lb += branch_lb(c);
    return lb;
  }

  std::int64_t total_demand() const { return root_ == kNoVertex ? 0 : subtree_demand(root_); }

  /// Sum of roster amounts over all leaves (for conservation checks).
  std::int64_t roster_total() const {
    std::int64_t s = 0;
    for (Vertex v : post_order())
      for (const RosterEntry& r : at(v).roster) s += r.amount;
    return s;
  }

  std::vector<Vertex> post_order() const {
    std::vector<Vertex> out;
    if (root_ == kNoVertex || !nodes_[root_].alive) return out;
    std::vector<Vertex> stack{root_};
    while (!stack.empty()) {
      Vertex v = stack.back();
      stack.pop_back();
      out.push_back(v);
      for (Vertex c : nodes_[v].children) stack.push_back(c);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::vector<Vertex> leaves() const {
    std::vector<Vertex> out;
    for (Vertex v : post_order())
      if (nodes_[v].children.empty() && v != root_) out.push_back(v);
    return out;
  }

  /// Twice the weight of the union of root paths of the given vertices.
  std::int64_t steiner_cost(std::span<const Vertex> vs) const {
    ++stamp_;
    if (mark_.size() < nodes_.size()) mark_.resize(nodes_.size(), 0);
    std::int64_t cost = 0;
    for (Vertex v : vs) {
      for (Vertex u = v; u != root_ && mark_[u] != stamp_; u = at(u).parent) {
        mark_[u] = stamp_;
        cost += 2 * at(u).edge_len;
      }
    }
    return cost;
  }

  // ---- safe operations ------------------------------------------------

  /// Merges the degree-two vertex v into its single child edge.
  bool splice(Vertex v) {
    const Node& n = at(v);
    if (v == root_ || n.children.size() != 1) return false;
    Vertex c = n.children[0];
    nodes_[c].parent = n.parent;
    nodes_[c].edge_len += n.edge_len;
    replace_child(n.parent, v, c);
    kill(v);
    log_.push_back({OpRecord::Kind::Splice, v, c});
    return true;
  }

  /// Collapses a traffic-one subtree below (u,v) into a single leaf whose
  /// length is the whole subtree weight and whose roster is the depth-first
  /// concatenation of the subtree rosters.
  bool condense(Vertex v) {
    const Node& n = at(v);
    if (v == root_ || n.children.empty() || traffic(v) != 1) return false;
    std::int64_t len = 0, dem = 0;
    std::vector<RosterEntry> roster;
    std::vector<Vertex> order = subtree_preorder(v);
    for (Vertex x : order) {
      len += nodes_[x].edge_len;
      dem += nodes_[x].demand;
      roster.insert(roster.end(), nodes_[x].roster.begin(), nodes_[x].roster.end());
    }
    Vertex parent = n.parent;
    Vertex leaf = make_node(parent, len, dem, std::move(roster));
    replace_child(parent, v, leaf);
    for (Vertex x : order) kill(x);
    log_.push_back({OpRecord::Kind::Condense, v, kNoVertex, kNoVertex, kNoVertex, leaf});
    return true;
  }

  /// Deletes v and reattaches its children to v's parent when the stem
  /// traffic equals the summed child traffic (the stem's LB contribution
  /// redistributes exactly).
  bool unzip(Vertex v) {
    const Node& n = at(v);
    if (v == root_ || n.children.empty()) return false;
    std::int64_t child_sum = 0;
    for (Vertex c : n.children) child_sum += traffic(c);
    if (traffic(v) != child_sum) return false;
    for (Vertex c : n.children) {
      nodes_[c].parent = n.parent;
      nodes_[c].edge_len += n.edge_len;
    }
    auto& pk = nodes_[n.parent].children;
    auto it = std::find(pk.begin(), pk.end(), v);
    it = pk.erase(it);
    pk.insert(it, n.children.begin(), n.children.end());
    kill(v);
    log_.push_back({OpRecord::Kind::Unzip, v});
    return true;
  }

  /// Merges two sibling leaves with combined demand <= Q; lengths add, the
  /// first roster precedes the second.
  bool unite(Vertex v1, Vertex v2) {
    const Node& n1 = at(v1);
    const Node& n2 = at(v2);
    if (v1 == v2 || !n1.children.empty() || !n2.children.empty() || n1.parent != n2.parent ||
        v1 == root_ || v2 == root_)
      throw Error("unite: arguments must be distinct sibling leaves");
    if (n1.demand + n2.demand > capacity_) return false;
    std::vector<RosterEntry> roster = n1.roster;
    roster.insert(roster.end(), n2.roster.begin(), n2.roster.end());
    Vertex parent = n1.parent;
    Vertex v0 = make_node(parent, n1.edge_len + n2.edge_len, n1.demand + n2.demand, std::move(roster));
    replace_child(parent, v1, v0);
    erase_child(parent, v2);
    kill(v1);
    kill(v2);
    log_.push_back({OpRecord::Kind::Unite, v1, v2, kNoVertex, kNoVertex, v0});
    return true;
  }

  /// Reparents the subtree under w2 as a child of w1 (its sibling) when doing
  /// so cannot change the traffic on (v, w1). The classical form f(e0)=f(e1)
  /// is the special case where the slack is forced; the condition checked is
  /// the exact one required for LB invariance.
  bool slide(Vertex v, Vertex w1, Vertex w2) {
    at(v);
    const Node& m1 = at(w1);
    at(w2);
    if (v == root_ || m1.parent != v || nodes_[w2].parent != v || w1 == w2)
      throw Error("slide: edges not in required configuration");
    if (m1.children.empty()) return false;  // never park demand under a leaf
    if (ceil_div(subtree_demand(w1) + subtree_demand(w2), capacity_) != traffic(w1)) return false;
    erase_child(v, w2);
    nodes_[w2].parent = w1;
    nodes_[w1].children.push_back(w2);
    dirty_ = true;
    log_.push_back({OpRecord::Kind::Slide, v, w1, w2});
    return true;
  }

  /// Packages three leaf children of a vertex with at least four children
  /// under a fresh zero-length vertex, provided the triple forms a 2-chain
  /// (pairwise sums above Q, total strictly inside (1.5Q, 2Q)).
  bool group(Vertex u, std::array<Vertex, 3> triple) {
    at(u);
    for (Vertex w : triple) {
      const Node& n = at(w);
      if (n.parent != u || !n.children.empty()) throw Error("group: triple must be leaf children of u");
    }
    if (triple[0] == triple[1] || triple[0] == triple[2] || triple[1] == triple[2])
      throw Error("group: triple must be distinct");
    if (nodes_[u].children.size() < 4) return false;
    std::int64_t d0 = nodes_[triple[0]].demand, d1 = nodes_[triple[1]].demand, d2 = nodes_[triple[2]].demand;
    std::int64_t sum = d0 + d1 + d2;
    if (!(3 * capacity_ < 2 * sum && 2 * sum < 4 * capacity_)) return false;
    if (d0 + d1 <= capacity_ || d0 + d2 <= capacity_ || d1 + d2 <= capacity_) return false;
    Vertex nu = make_node(u, 0, 0, {});
    replace_child(u, triple[0], nu);
    erase_child(u, triple[1]);
    erase_child(u, triple[2]);
    for (Vertex w : triple) {
      nodes_[w].parent = nu;
      nodes_[nu].children.push_back(w);
    }
    log_.push_back({OpRecord::Kind::Group, u, triple[0], triple[1], triple[2], nu});
    return true;
  }

  /// Exhaustively applies safe operations (splice, condense, unite, unzip,
  /// slide, group — rescanning from the top after each hit) until none is
  /// applicable. Returns the number of operations applied.
  std::size_t simplify() {
    std::size_t applied = 0;
    std::size_t fuse = 64 * static_cast<std::size_t>(node_count() + 4) * (node_count() + 4) + 1024;
    for (;;) {
      if (try_splice() || try_condense() || try_unite() || try_unzip() || try_slide() || try_group()) {
        if (++applied > fuse) throw InternalError("simplify did not reach a fixpoint:\n" + dump());
        continue;
      }
      break;
    }
    return applied;
  }

  /// Removes covered demand from a leaf, consuming its roster front to back.
  /// Empty leaves (and any bare internal path above them) are pruned.
  std::vector<RosterEntry> remove_demand(Vertex leaf, std::int64_t amount) {
    Node& n = nodes_.at(leaf);
    if (!n.alive || !n.children.empty()) throw Error("remove_demand: not a leaf");
    if (amount <= 0 || amount > n.demand) throw Error("remove_demand: amount out of range");
    std::vector<RosterEntry> consumed;
    std::int64_t need = amount;
    while (need > 0) {
      RosterEntry& front = n.roster.front();
      std::int64_t take = std::min(front.amount, need);
      consumed.push_back({front.client, take});
      front.amount -= take;
      need -= take;
      if (front.amount == 0) n.roster.erase(n.roster.begin());
    }
    n.demand -= amount;
    dirty_ = true;
    if (n.demand == 0) prune_upwards(leaf);
    return consumed;
  }

  /// Re-applies a recorded operation (for log replay). Throws if the
  /// operation no longer applies or creates a different vertex.
  void apply(const OpRecord& rec) {
    bool ok = false;
    Vertex before = node_count();
    switch (rec.kind) {
      case OpRecord::Kind::Splice: ok = splice(rec.a); break;
      case OpRecord::Kind::Condense: ok = condense(rec.a); break;
      case OpRecord::Kind::Unzip: ok = unzip(rec.a); break;
      case OpRecord::Kind::Unite: ok = unite(rec.a, rec.b); break;
      case OpRecord::Kind::Slide: ok = slide(rec.a, rec.b, rec.c); break;
      case OpRecord::Kind::Group: ok = group(rec.a, {rec.b, rec.c, rec.d}); break;
    }
    if (!ok) throw InternalError("replay: recorded op did not apply");
    if (rec.created != kNoVertex && (node_count() == before || node_count() - 1 != rec.created))
      throw InternalError("replay: created vertex id mismatch");
  }

  /// Canonical structural signature (topology, lengths, demands, rosters).
  std::string signature() const {
    std::ostringstream os;
    sig_rec(root_, os);
    return os.str();
  }

  std::string dump() const {
    std::ostringstream os;
    os << "WorkingTree Q=" << capacity_ << " lb=" << working_lb() << "\n";
    dump_rec(root_, 0, os);
    return os.str();
  }

 private:
  struct Node {
    Vertex parent = kNoVertex;
    std::int64_t edge_len = 0;
    std::int64_t demand = 0;
    std::vector<Vertex> children;
    std::vector<RosterEntry> roster;
    bool alive = false;
  };

  const Node& at(Vertex v) const {
    if (v < 0 || v >= node_count() || !nodes_[v].alive)
      throw Error("unknown or removed vertex " + std::to_string(v));
    return nodes_[v];
  }

  Vertex make_node(Vertex parent, std::int64_t len, std::int64_t demand, std::vector<RosterEntry> roster) {
    Node n;
    n.alive = true;
    n.parent = parent;
    n.edge_len = len;
    n.demand = demand;
    n.roster = std::move(roster);
    nodes_.push_back(std::move(n));
    dirty_ = true;
    return node_count() - 1;
  }

  void kill(Vertex v) {
    nodes_[v].alive = false;
    nodes_[v].children.clear();
    nodes_[v].roster.clear();
    nodes_[v].demand = 0;
    dirty_ = true;
  }

  void replace_child(Vertex parent, Vertex old_c, Vertex new_c) {
    auto& ch = nodes_[parent].children;
    *std::find(ch.begin(), ch.end(), old_c) = new_c;
    dirty_ = true;
  }

  void erase_child(Vertex parent, Vertex c) {
    auto& ch = nodes_[parent].children;
    ch.erase(std::find(ch.begin(), ch.end(), c));
    dirty_ = true;
  }

  void prune_upwards(Vertex leaf) {
    Vertex v = leaf;
    while (v != root_ && nodes_[v].children.empty() && nodes_[v].demand == 0) {
      Vertex p = nodes_[v].parent;
      erase_child(p, v);
      kill(v);
      v = p;
    }
  }

  std::vector<Vertex> subtree_preorder(Vertex v) const {
    std::vector<Vertex> out, stack{v};
    while (!stack.empty()) {
      Vertex x = stack.back();
      stack.pop_back();
      out.push_back(x);
      const auto& ch = nodes_[x].children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    return out;
  }

  void ensure_subtree() const {
    if (!dirty_) return;
    sub_.assign(nodes_.size(), 0);
    for (Vertex v : post_order()) {
      sub_[v] = nodes_[v].demand;
      for (Vertex c : nodes_[v].children) sub_[v] += sub_[c];
    }
    dirty_ = false;
  }

  // ---- fixpoint scanners (deterministic candidate order) ---------------

  bool try_splice() {
    for (Vertex v : post_order())
      if (v != root_ && nodes_[v].children.size() == 1 && splice(v)) return true;
    return false;
  }

  bool try_condense() {
    for (Vertex v : post_order())
      if (v != root_ && !nodes_[v].children.empty() && traffic(v) == 1 && condense(v)) return true;
    return false;
  }

  bool try_unite() {
    for (Vertex u : post_order()) {
      std::vector<Vertex> ls;
      for (Vertex c : nodes_[u].children)
        if (nodes_[c].children.empty()) ls.push_back(c);
      if (ls.size() < 2) continue;
      std::sort(ls.begin(), ls.end(), [&](Vertex a, Vertex b) {
        return std::pair(nodes_[a].demand, a) < std::pair(nodes_[b].demand, b);
      });
      if (nodes_[ls[0]].demand + nodes_[ls[1]].demand <= capacity_ && unite(ls[0], ls[1])) return true;
    }
    return false;
  }

  bool try_unzip() {
    for (Vertex v : post_order())
      if (v != root_ && !nodes_[v].children.empty() && unzip(v)) return true;
    return false;
  }

  bool try_slide() {
    for (Vertex v : post_order()) {
      if (v == root_ || nodes_[v].children.size() < 2) continue;
      std::vector<Vertex> inner, all = nodes_[v].children;
      for (Vertex c : all)
        if (!nodes_[c].children.empty()) inner.push_back(c);
      if (inner.empty()) continue;
      std::sort(inner.begin(), inner.end(), [&](Vertex a, Vertex b) {
        return std::pair(-traffic(a), a) < std::pair(-traffic(b), b);
      });
      std::sort(all.begin(), all.end(), [&](Vertex a, Vertex b) {
        return std::pair(nodes_[a].edge_len, a) < std::pair(nodes_[b].edge_len, b);
      });
      for (Vertex w1 : inner)
        for (Vertex w2 : all)
          if (w2 != w1 && slide(v, w1, w2)) return true;
    }
    return false;
  }

  bool try_group() {
    for (Vertex u : post_order()) {
      if (nodes_[u].children.size() < 4) continue;
      std::vector<Vertex> ls;
      for (Vertex c : nodes_[u].children)
        if (nodes_[c].children.empty()) ls.push_back(c);
      if (ls.size() < 3) continue;
      // A qualifying triple exists iff the three smallest demands stay under
      // 2Q (pairwise sums already exceed Q once unite is exhausted).
      std::vector<std::int64_t> ds;
      for (Vertex c : ls) ds.push_back(nodes_[c].demand);
      std::sort(ds.begin(), ds.end());
      if (ds.size() >= 3 && ds[0] + ds[1] + ds[2] >= 2 * capacity_) continue;
      std::sort(ls.begin(), ls.end(), [&](Vertex a, Vertex b) {
        return std::pair(-nodes_[a].edge_len, a) < std::pair(-nodes_[b].edge_len, b);
      });
      for (std::size_t i = 0; i < ls.size(); ++i)
        for (std::size_t j = i + 1; j < ls.size(); ++j)
          for (std::size_t k = j + 1; k < ls.size(); ++k)
            if (group(u, {ls[i], ls[j], ls[k]})) return true;
    }
    return false;
  }

  void sig_rec(Vertex v, std::ostringstream& os) const {
    if (v == kNoVertex || !nodes_[v].alive) return;
    os << "(" << nodes_[v].edge_len << ":" << nodes_[v].demand;
    for (const RosterEntry& r : nodes_[v].roster) os << "," << r.client << "*" << r.amount;
    for (Vertex c : nodes_[v].children) sig_rec(c, os);
    os << ")";
  }

  void dump_rec(Vertex v, int depth, std::ostringstream& os) const {
    if (v == kNoVertex || !nodes_[v].alive) return;
    for (int i = 0; i < depth; ++i) os << "  ";
    os << "#" << v << " len=" << nodes_[v].edge_len << " d=" << nodes_[v].demand
       << " f=" << (v == root_ ? 0 : traffic(v)) << "\n";
    for (Vertex c : nodes_[v].children) dump_rec(c, depth + 1, os);
  }

  std::vector<Node> nodes_;
  Vertex root_ = kNoVertex;
  std::int64_t capacity_ = 1;
  std::int64_t initial_lb_ = 0;
  std::vector<OpRecord> log_;
  mutable std::vector<std::int64_t> sub_;
  mutable bool dirty_ = true;
  mutable std::vector<std::uint32_t> mark_;
  mutable std::uint32_t stamp_ = 0;
};

}  // namespace treecvrp
