#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "treecvrp/common.hpp"

namespace treecvrp {

/// Immutable rooted-tree CVRP instance. Vertices are dense indices; the edge
/// (parent(v), v) is identified by its child v. All lengths and demands are
/// exact integers, capacity is explicit (demands are never rescaled).
class Instance {
 public:
  struct EdgeSpec {
    std::string parent;
    std::string child;
    std::int64_t length = 0;
  };

  Instance() = default;

  /// Builds and validates an instance. Throws ParseError on any invariant
  /// violation (cycle, duplicate edge, negative values, Q < 1, ...).
  static Instance build(const std::string& depot, std::int64_t capacity,
                        const std::vector<EdgeSpec>& edges,
                        const std::map<std::string, std::int64_t>& demands) {
    if (capacity < 1) throw ParseError("capacity must be >= 1");
    Instance inst;
    inst.capacity_ = capacity;
    inst.depot_ = inst.intern(depot);
    for (const auto& e : edges) {
      if (e.length < 0) throw ParseError("negative length on edge to '" + e.child + "'");
      Vertex p = inst.intern(e.parent);
      Vertex c = inst.intern(e.child);
      if (c == inst.depot_) throw ParseError("not a tree: depot has a parent edge");
      if (inst.parent_[c] != kNoVertex) throw ParseError("duplicate edge: child '" + e.child + "' has two parents");
      if (p == c) throw ParseError("not a tree: self-loop at '" + e.child + "'");
      inst.parent_[c] = p;
      inst.length_[c] = e.length;
    }
    for (const auto& [name, d] : demands) {
      auto it = inst.name_to_id_.find(name);
      if (it == inst.name_to_id_.end()) throw ParseError("demand on unknown vertex '" + name + "'");
      if (d < 0) throw ParseError("negative demand at '" + name + "'");
      inst.demand_[it->second] = d;
    }
    inst.finalize();
    return inst;
  }

  static Instance parse(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed document: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("malformed document: top level must be an object");
    try {
      if (!j.contains("capacity") || !j["capacity"].is_number_integer())
        throw ParseError("missing or non-integer 'capacity'");
      if (!j.contains("depot") || !j["depot"].is_string())
        throw ParseError("missing or non-string 'depot'");
      if (!j.contains("edges") || !j["edges"].is_array())
        throw ParseError("missing or non-array 'edges'");
      std::vector<EdgeSpec> edges;
      for (const auto& je : j["edges"]) {
        if (!je.is_object() || !je.contains("parent") || !je.contains("child") || !je.contains("length") ||
            !je["parent"].is_string() || !je["child"].is_string() || !je["length"].is_number_integer())
          throw ParseError("malformed edge entry");
        edges.push_back({je["parent"].get<std::string>(), je["child"].get<std::string>(),
                         je["length"].get<std::int64_t>()});
      }
      std::map<std::string, std::int64_t> demands;
      if (j.contains("demands")) {
        if (!j["demands"].is_object()) throw ParseError("'demands' must be an object");
        for (const auto& [k, v] : j["demands"].items()) {
          if (!v.is_number_integer()) throw ParseError("non-integer demand at '" + k + "'");
          demands[k] = v.get<std::int64_t>();
        }
      }
      return build(j["depot"].get<std::string>(), j["capacity"].get<std::int64_t>(), edges, demands);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed document: ") + e.what());
    }
  }

  /// Canonical form: sorted keys, edges sorted by (parent, child), demands
  /// only for positive values. serialize(parse(x)) is byte-stable.
  std::string serialize() const {
    nlohmann::json j;
    j["capacity"] = capacity_;
    j["depot"] = names_[depot_];
    std::vector<std::pair<std::string, std::string>> order;
    for (Vertex v = 0; v < size(); ++v)
      if (v != depot_) order.emplace_back(names_[parent_[v]], names_[v]);
    std::sort(order.begin(), order.end());
    j["edges"] = nlohmann::json::array();
    for (const auto& [p, c] : order) {
      nlohmann::json je;
      je["parent"] = p;
      je["child"] = c;
      je["length"] = length_[name_to_id_.at(c)];
      j["edges"].push_back(je);
    }
    j["demands"] = nlohmann::json::object();
    for (Vertex v = 0; v < size(); ++v)
      if (demand_[v] > 0) j["demands"][names_[v]] = demand_[v];
    return j.dump(2) + "\n";
  }

  Vertex size() const { return static_cast<Vertex>(names_.size()); }
  Vertex depot() const { return depot_; }
  std::int64_t capacity() const { return capacity_; }
  const std::string& name(Vertex v) const { return names_.at(v); }
  Vertex id(const std::string& name) const {
    auto it = name_to_id_.find(name);
    return it == name_to_id_.end() ? kNoVertex : it->second;
  }
  Vertex parent(Vertex v) const { return parent_.at(v); }
  std::int64_t length(Vertex v) const { return length_.at(v); }
  std::int64_t demand(Vertex v) const { return demand_.at(v); }
  const std::vector<Vertex>& children(Vertex v) const { return children_.at(v); }
  bool is_leaf(Vertex v) const { return children_.at(v).empty(); }

  std::int64_t total_demand() const { return subtree_demand_[depot_]; }

  /// Total demand in the subtree rooted at v.
  std::int64_t subtree_demand(Vertex v) const {
    check_vertex(v);
    return subtree_demand_[v];
  }

  /// f(e) for the edge (parent(v), v): minimum tours that must cross it.
  std::int64_t edge_traffic(Vertex v) const {
    check_vertex(v);
    if (parent_[v] == kNoVertex) throw Error("edge_traffic: depot has no parent edge");
    return ceil_div(subtree_demand_[v], capacity_);
  }

  /// Sum over edges of 2 * length * traffic.
  std::int64_t lower_bound() const {
    std::int64_t lb = 0;
    for (Vertex v = 0; v < size(); ++v)
      if (parent_[v] != kNoVertex) lb += 2 * length_[v] * ceil_div(subtree_demand_[v], capacity_);
    return lb;
  }

  std::int64_t dist_to_depot(Vertex v) const {
    check_vertex(v);
    std::int64_t d = 0;
    for (Vertex u = v; u != depot_; u = parent_[u]) d += length_[u];
    return d;
  }

  /// Minimum closed-walk cost from the depot through the given vertices:
  /// twice the weight of the union of depot paths.
  std::int64_t tour_cost(std::span<const Vertex> clients) const {
    std::int64_t cost = 0;
    std::vector<char> mark(names_.size(), 0);
    for (Vertex c : clients) {
      check_vertex(c);
      for (Vertex u = c; u != depot_ && !mark[u]; u = parent_[u]) {
        mark[u] = 1;
        cost += 2 * length_[u];
      }
    }
    return cost;
  }

 private:
  Vertex intern(const std::string& name) {
    auto it = name_to_id_.find(name);
    if (it != name_to_id_.end()) return it->second;
    Vertex v = size();
    name_to_id_.emplace(name, v);
    names_.push_back(name);
    parent_.push_back(kNoVertex);
    length_.push_back(0);
    demand_.push_back(0);
    return v;
  }

  void finalize() {
    // Every vertex must reach the depot through the parent map; a walk longer
    // than the vertex count means a cycle or a disconnected component.
    for (Vertex v = 0; v < size(); ++v) {
      Vertex u = v;
      for (Vertex steps = 0; u != depot_; ++steps) {
        if (u == kNoVertex || steps > size()) throw ParseError("not a tree");
        u = parent_[u];
      }
    }
    // With both totals capped at 1e9 every bound, cost, and certificate
    // product below stays inside 64 bits.
    constexpr std::int64_t kMaxTotal = 1'000'000'000;
    std::int64_t total_len = 0, total_demand = 0;
    for (Vertex v = 0; v < size(); ++v) {
      total_len += length_[v];
      total_demand += demand_[v];
      if (total_len > kMaxTotal || total_demand > kMaxTotal)
        throw ParseError("instance too large: total length and total demand must stay under 1e9");
    }
    children_.assign(names_.size(), {});
    for (Vertex v = 0; v < size(); ++v)
      if (v != depot_) children_[parent_[v]].push_back(v);
    // Children ordered by name so traversal order never depends on document
    // edge order.
    for (auto& ch : children_)
      std::sort(ch.begin(), ch.end(), [&](Vertex a, Vertex b) { return names_[a] < names_[b]; });
    subtree_demand_.assign(names_.size(), 0);
    std::vector<Vertex> post = post_order();
    for (Vertex v : post) {
      subtree_demand_[v] = demand_[v];
      for (Vertex c : children_[v]) subtree_demand_[v] += subtree_demand_[c];
    }
  }

  std::vector<Vertex> post_order() const {
    std::vector<Vertex> out, stack{depot_};
    while (!stack.empty()) {
      Vertex v = stack.back();
      stack.pop_back();
      out.push_back(v);
      for (Vertex c : children_[v]) stack.push_back(c);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  void check_vertex(Vertex v) const {
    if (v < 0 || v >= size()) throw Error("unknown vertex id " + std::to_string(v));
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, Vertex> name_to_id_;
  std::vector<Vertex> parent_;
  std::vector<std::int64_t> length_;
  std::vector<std::int64_t> demand_;
  std::vector<std::vector<Vertex>> children_;
  std::vector<std::int64_t> subtree_demand_;
  std::int64_t capacity_ = 1;
  Vertex depot_ = 0;
};

/// One tour: covered amount per original client, keyed by client name.
using Tour = std::map<std::string, std::int64_t>;

struct Solution {
  std::vector<Tour> tours;
  std::int64_t cost = 0;
  std::int64_t lower_bound = 0;

  /// The 4/3 guarantee in exact integer form.
  bool ratio_ok() const { return 3 * cost <= 4 * lower_bound; }

  static Solution parse(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed document: ") + e.what());
    }
    Solution s;
    try {
      if (!j.is_object() || !j.contains("tours") || !j["tours"].is_array() ||
          !j.contains("cost") || !j.contains("lower_bound"))
        throw ParseError("malformed solution document");
      s.cost = j["cost"].get<std::int64_t>();
      s.lower_bound = j["lower_bound"].get<std::int64_t>();
      for (const auto& jt : j["tours"]) {
        if (!jt.is_object()) throw ParseError("malformed tour entry");
        Tour t;
        for (const auto& [k, v] : jt.items()) t[k] = v.get<std::int64_t>();
        s.tours.push_back(std::move(t));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed document: ") + e.what());
    }
    return s;
  }

  std::string serialize() const {
    nlohmann::json j;
    j["cost"] = cost;
    j["lower_bound"] = lower_bound;
    j["tours"] = nlohmann::json::array();
    for (const auto& t : tours) {
      nlohmann::json jt = nlohmann::json::object();
      for (const auto& [k, v] : t) jt[k] = v;
      j["tours"].push_back(jt);
    }
    return j.dump(2) + "\n";
  }
};

struct VerificationReport {
  bool loads_ok = true;      // (a) every tour load <= Q
  bool coverage_ok = true;   // (b) per-client coverage equals demand
  bool cost_ok = true;       // (c) stated cost equals recomputed tour costs
  bool ratio_ok = true;      // (d) 3*cost <= 4*LB, advisory
  std::int64_t recomputed_cost = 0;
  std::int64_t recomputed_lb = 0;
  std::vector<std::string> violations;

  /// Checks (a)-(c); (d) stays advisory.
  bool accepted() const { return loads_ok && coverage_ok && cost_ok; }
};

inline VerificationReport verify_solution(const Instance& inst, const Solution& sol) {
  VerificationReport rep;
  rep.recomputed_lb = inst.lower_bound();
  std::vector<std::int64_t> covered(inst.size(), 0);
  for (std::size_t i = 0; i < sol.tours.size(); ++i) {
    const Tour& t = sol.tours[i];
    std::int64_t load = 0;
    std::vector<Vertex> clients;
    bool tour_valid = true;
    for (const auto& [name, amount] : t) {
      Vertex v = inst.id(name);
      if (v == kNoVertex) {
        rep.loads_ok = false;
        tour_valid = false;
        rep.violations.push_back("tour " + std::to_string(i) + ": unknown client '" + name + "'");
        continue;
      }
      if (amount <= 0) {
        rep.loads_ok = false;
        rep.violations.push_back("tour " + std::to_string(i) + ": non-positive amount at '" + name + "'");
        continue;
      }
      load += amount;
      covered[v] += amount;
      clients.push_back(v);
    }
    if (load > inst.capacity()) {
      rep.loads_ok = false;
      rep.violations.push_back("tour " + std::to_string(i) + ": load " + std::to_string(load) +
                               " exceeds capacity " + std::to_string(inst.capacity()));
    }
    if (tour_valid) rep.recomputed_cost += inst.tour_cost(clients);
  }
  for (Vertex v = 0; v < inst.size(); ++v) {
    if (covered[v] != inst.demand(v)) {
      rep.coverage_ok = false;
      rep.violations.push_back("client '" + inst.name(v) + "': covered " + std::to_string(covered[v]) +
                               " of demand " + std::to_string(inst.demand(v)));
    }
  }
  if (rep.recomputed_cost != sol.cost) {
    rep.cost_ok = false;
    rep.violations.push_back("stated cost " + std::to_string(sol.cost) + " != recomputed " +
                             std::to_string(rep.recomputed_cost));
  }
  rep.ratio_ok = 3 * sol.cost <= 4 * rep.recomputed_lb;
  if (!rep.ratio_ok) rep.violations.push_back("ratio check failed: 3*cost > 4*LB");
  return rep;
}

/// An instance in standard form (demand exactly on leaves, each in (0, Q)
/// only after the solver's peel; no degree-2 non-root vertices) plus the map
/// from each leaf back to the original client it stands for.
struct NormalizedInstance {
  Instance tree;
  std::unordered_map<Vertex, Vertex> leaf_client;  // normalized leaf -> original vertex
};

/// Moves internal demand onto zero-length pendant leaves, deletes zero-demand
/// leaves, and splices degree-2 non-root vertices. Preserves the lower bound
/// exactly.
inline NormalizedInstance normalize(const Instance& inst) {
  struct Node {
    Vertex parent;
    std::int64_t len;
    std::int64_t demand;
    Vertex original;  // original client vertex, kNoVertex for structural nodes
  };
  std::vector<Node> nodes(inst.size());
  for (Vertex v = 0; v < inst.size(); ++v)
    nodes[v] = {inst.parent(v), v == inst.depot() ? 0 : inst.length(v), 0, kNoVertex};
  std::vector<std::vector<Vertex>> kids(inst.size());
  for (Vertex v = 0; v < inst.size(); ++v) kids[v] = inst.children(v);  // name order

  // Demand moves to a pendant: internal vertices get a zero-length leaf,
  // original leaves keep theirs in place (also modeled as carrying it).
  for (Vertex v = 0; v < inst.size(); ++v) {
    if (inst.demand(v) == 0) continue;
    if (inst.is_leaf(v) && v != inst.depot()) {
      nodes[v].demand = inst.demand(v);
      nodes[v].original = v;
    } else {
      Vertex leaf = static_cast<Vertex>(nodes.size());
      nodes.push_back({v, 0, inst.demand(v), v});
      kids.push_back({});
      kids[v].push_back(leaf);
    }
  }

  std::vector<char> dead(nodes.size(), 0);
  // Delete zero-demand leaves until none remain (deleting one can expose its
  // parent as the next).
  std::vector<std::int64_t> subtree(nodes.size(), 0);
  for (bool changed = true; changed;) {
    changed = false;
    for (Vertex v = 0; v < static_cast<Vertex>(nodes.size()); ++v) {
      if (dead[v] || v == inst.depot()) continue;
      if (kids[v].empty() && nodes[v].demand == 0) {
        dead[v] = 1;
        auto& pk = kids[nodes[v].parent];
        pk.erase(std::find(pk.begin(), pk.end(), v));
        changed = true;
      }
    }
  }
  // Splice non-root vertices of degree two.
  for (bool changed = true; changed;) {
    changed = false;
    for (Vertex v = 0; v < static_cast<Vertex>(nodes.size()); ++v) {
      if (dead[v] || v == inst.depot() || kids[v].size() != 1 || nodes[v].demand != 0) continue;
      Vertex c = kids[v][0];
      nodes[c].parent = nodes[v].parent;
      nodes[c].len += nodes[v].len;
      auto& pk = kids[nodes[v].parent];
      *std::find(pk.begin(), pk.end(), v) = c;
      dead[v] = 1;
      changed = true;
    }
  }

  // Rebuild as a fresh compact instance; names are synthetic except that the
  // depot keeps its own.
  std::vector<Instance::EdgeSpec> edges;
  std::map<std::string, std::int64_t> demands;
  std::vector<std::string> new_name(nodes.size());
  std::vector<Vertex> order{inst.depot()};
  for (std::size_t i = 0; i < order.size(); ++i)
    for (Vertex c : kids[order[i]]) order.push_back(c);
  int counter = 0;
  for (Vertex v : order) new_name[v] = v == inst.depot() ? inst.name(inst.depot()) : "n" + std::to_string(counter++);
  for (Vertex v : order) {
    if (v == inst.depot()) continue;
    edges.push_back({new_name[nodes[v].parent], new_name[v], nodes[v].len});
    if (nodes[v].demand > 0) demands[new_name[v]] = nodes[v].demand;
  }
  NormalizedInstance out;
  out.tree = Instance::build(inst.name(inst.depot()), inst.capacity(), edges, demands);
  for (Vertex v : order) {
    if (v == inst.depot() || nodes[v].demand == 0) continue;
    out.leaf_client.emplace(out.tree.id(new_name[v]), nodes[v].original);
  }
  return out;
}

}  // namespace treecvrp
