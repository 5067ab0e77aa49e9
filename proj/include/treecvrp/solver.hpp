#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treecvrp/classify.hpp"
#include "treecvrp/common.hpp"
#include "treecvrp/instance.hpp"
#include "treecvrp/rewrite.hpp"
#include "treecvrp/strategies.hpp"

namespace treecvrp {

/// Result of one iteration: either a certified tour set for a dispatched
/// case, or the signal that every root branch is settled. Peel sets emitted
/// while stabilizing ride along.
struct IterationOutcome {
  std::vector<TourSet> peeled;
  std::optional<TourSet> resolved;
  std::string case_tag;

  bool root_ready() const { return !resolved.has_value(); }
};

struct SolveReport {
  Solution solution;
  std::int64_t lower_bound = 0;
  std::int64_t margin = 0;          // 4*LB - 3*cost
  std::int64_t accounted_cost = 0;  // sum of tour-set costs in the working tree
  int iterations = 0;
  std::vector<std::string> set_traces;
  std::vector<OpRecord> op_log;
};

namespace detail {

/// Peel + simplify to a joint fixpoint: simplification may push a leaf to
/// exactly Q (unite/condense boundary), which the next peel removes.
inline void stabilize(WorkingTree& t, std::vector<TourSet>& peels) {
  for (;;) {
    TourSet p = peel_heavy_clients(t);
    bool peeled = !p.tours.empty();
    if (peeled) peels.push_back(std::move(p));
    std::size_t ops = t.simplify();
    if (!peeled && ops == 0) break;
  }
}

}  // namespace detail

/// One round of the main loop: stabilize, then either report the root ready
/// or resolve a minimally unsettled branch through the applicable case
/// (sibling chain pair, trident, short chain — in that order).
inline IterationOutcome iteration_step(WorkingTree& t) {
  IterationOutcome out;
  detail::stabilize(t, out.peeled);
  std::optional<Vertex> found = find_minimally_unsettled(t);
  if (!found) return out;
  Vertex b = *found;

  std::vector<ChainLabel> long_chains;
  int one_branches = 0;
  for (Vertex c : t.children(b)) {
    if (t.traffic(c) == 1) {
      ++one_branches;
      continue;
    }
    if (long_chains.size() < 2) {
      auto label = recognize_chain(t, c);
      if (label && label->long_chain) long_chains.push_back(std::move(*label));
    }
  }
  if (long_chains.size() >= 2) {
    out.resolved = resolve_sibling_pair(t, long_chains[0], long_chains[1]);
    out.case_tag = "sibling-pair";
  } else if (one_branches >= 3) {
    out.resolved = resolve_trident(t, b);
    out.case_tag = "trident";
  } else {
    auto label = recognize_chain(t, b);
    if (!label || label->long_chain)
      throw InternalError("iteration: minimally unsettled branch matches no case\n" + t.dump());
    out.resolved = resolve_short_chain(t, *label);
    out.case_tag = "short-chain";
  }
  return out;
}

/// With every root branch settled, resolves them one by one: single tours
/// for 1-branches, cascades for long chains. Empties the tree.
inline std::vector<TourSet> resolve_root(WorkingTree& t) {
  std::vector<TourSet> out;
  while (!t.children(t.root()).empty()) {
    Vertex c = t.children(t.root()).front();
    if (t.traffic(c) == 1) {
      out.push_back(resolve_root_one_branch(t, c));
      continue;
    }
    auto label = recognize_chain(t, c);
    if (!label || !label->long_chain)
      throw InternalError("resolve_root: branch at root is not settled\n" + t.dump());
    out.push_back(resolve_root_chain(t, *label));
  }
  return out;
}

/// Replaces working pickups by the original-client shares consumed for them
/// and re-costs every tour in the original instance. The recomputed cost can
/// only be lower: rewrites never shorten an original root path.
inline Solution expand_tours(const Instance& original, const std::vector<TourSet>& sets) {
  Solution sol;
  for (const TourSet& ts : sets) {
    for (const WorkingTour& wt : ts.tours) {
      std::map<Vertex, std::int64_t> merged;
      for (const RosterEntry& r : wt.clients) merged[r.client] += r.amount;
      Tour tour;
      std::vector<Vertex> clients;
      for (const auto& [v, amount] : merged) {
        tour[original.name(v)] = amount;
        clients.push_back(v);
      }
      std::int64_t cost = original.tour_cost(clients);
      if (cost > wt.cost)
        throw InternalError("expand_tours: original cost " + std::to_string(cost) +
                            " exceeds accounted cost " + std::to_string(wt.cost));
      sol.cost += cost;
      sol.tours.push_back(std::move(tour));
    }
  }
  return sol;
}

/// End-to-end: normalize, peel, iterate, resolve the root, expand, verify.
/// The returned solution is feasible on the original instance and satisfies
/// 3*cost <= 4*LB exactly; any internal guarantee failure aborts loudly.
inline SolveReport solve(const Instance& inst) {
  SolveReport rep;
  rep.lower_bound = inst.lower_bound();
  NormalizedInstance norm = normalize(inst);
  if (norm.tree.lower_bound() != rep.lower_bound)
    throw InternalError("normalize changed the lower bound");
  WorkingTree t = WorkingTree::from_normalized_allow_heavy(norm);
  const std::int64_t total = t.total_demand();
  const std::int64_t peel_bound = total / t.capacity();
  const std::int64_t iter_bound = ceil_div(total, t.capacity());

  std::vector<TourSet> sets;
  std::int64_t removed = 0, consumed_lb = 0;
  auto absorb = [&](TourSet&& ts) {
    consumed_lb += ts.delta_lb;
    for (const WorkingTour& wt : ts.tours) removed += wt.load;
    sets.push_back(std::move(ts));
  };
  // Books balance after every mutation batch: the live bound equals the
  // initial bound minus everything consumed, and roster amounts plus removed
  // demand add back up to the original total.
  auto check_books = [&]() {
    if (t.working_lb() != t.initial_lb() - consumed_lb)
      throw InternalError("working lower bound drifted from the consumed reductions");
    if (t.roster_total() + removed != total)
      throw InternalError("roster conservation violated");
  };

  for (;;) {
    IterationOutcome out = iteration_step(t);
    for (TourSet& p : out.peeled) absorb(std::move(p));
    bool done = out.root_ready();
    if (!done) {
      absorb(std::move(*out.resolved));
      ++rep.iterations;
    }
    check_books();
    if (done) break;
    if (rep.iterations > iter_bound + peel_bound + 1)
      throw InternalError("iteration bound exceeded\n" + t.dump());
  }
  for (TourSet& ts : resolve_root(t)) absorb(std::move(ts));
  check_books();

  if (t.total_demand() != 0 || !t.children(t.root()).empty())
    throw InternalError("tree not empty after root resolution\n" + t.dump());
  if (consumed_lb != t.initial_lb())
    throw InternalError("tour set reductions do not add up to the lower bound");

  rep.solution = expand_tours(inst, sets);
  rep.solution.lower_bound = rep.lower_bound;
  VerificationReport check = verify_solution(inst, rep.solution);
  if (!check.accepted()) {
    std::string why;
    for (const std::string& v : check.violations) why += "\n  " + v;
    throw InternalError("expanded solution failed verification:" + why);
  }
  if (3 * rep.solution.cost > 4 * rep.lower_bound)
    throw CertificateViolation("final solution breaks the 4/3 bound: cost=" +
                               std::to_string(rep.solution.cost) + " lb=" + std::to_string(rep.lower_bound));
  rep.margin = 4 * rep.lower_bound - 3 * rep.solution.cost;
  for (const TourSet& ts : sets) rep.accounted_cost += ts.cost;
  for (const TourSet& ts : sets) rep.set_traces.push_back(ts.trace_json());
  rep.op_log = t.op_log();
  return rep;
}

}  // namespace treecvrp
