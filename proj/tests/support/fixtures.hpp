#pragma once

#include <map>
#include <string>
#include <vector>

#include "treecvrp/generator.hpp"
#include "treecvrp/instance.hpp"
#include "treecvrp/rewrite.hpp"

namespace fixtures {

using treecvrp::Instance;

inline Instance make(const std::string& depot, std::int64_t q,
                     std::vector<Instance::EdgeSpec> edges,
                     std::map<std::string, std::int64_t> demands) {
  return Instance::build(depot, q, edges, demands);
}

/// Stem length 1 under the depot, three leaves of lengths 3, 2, 1 and demand
/// 6 each, Q = 10. LB = 16, solver cost 18.
inline Instance two_chain() {
  return make("r", 10,
              {{"r", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1}},
              {{"a", 6}, {"b", 6}, {"c", 6}});
}

/// The two-chain with one more level stacked on top: leaves of demand 6 and 5
/// (lengths 4 and 3) beside the old stem. A 3-chain after labeling.
inline Instance three_chain() {
  return make("r", 10,
              {{"r", "t", 1},
               {"t", "s", 1},
               {"s", "a", 3},
               {"s", "b", 2},
               {"s", "c", 1},
               {"t", "d", 4},
               {"t", "e", 3}},
              {{"a", 6}, {"b", 6}, {"c", 6}, {"d", 6}, {"e", 5}});
}

/// Short 3-chain with a = b = c = 1 (stem length 1, top leaf lengths 1, 1):
/// its top-level tour set meets the 4/3 bound with margin exactly zero.
inline Instance short_chain_boundary() {
  return make("r", 10,
              {{"r", "t", 1},
               {"t", "s", 1},
               {"s", "a", 3},
               {"s", "b", 2},
               {"s", "c", 1},
               {"t", "d", 1},
               {"t", "e", 1}},
              {{"a", 6}, {"b", 6}, {"c", 6}, {"d", 6}, {"e", 5}});
}

inline treecvrp::WorkingTree working(const Instance& inst) {
  return treecvrp::WorkingTree::from_normalized(treecvrp::normalize(inst));
}

inline treecvrp::WorkingTree working_heavy(const Instance& inst) {
  return treecvrp::WorkingTree::from_normalized_allow_heavy(treecvrp::normalize(inst));
}

/// Random instances for property tests; slightly smaller than the benchmark
/// sizes so suites stay fast.
inline Instance random_instance(std::uint64_t seed, int max_n = 40) {
  treecvrp::GenParams p;
  p.seed = seed;
  p.n = 2 + static_cast<int>(seed % static_cast<std::uint64_t>(max_n - 1));
  p.capacity = 1 + static_cast<std::int64_t>(seed % 23);
  p.max_demand = 1 + static_cast<std::int64_t>(seed % (3 * p.capacity));
  p.max_len = 1 + static_cast<std::int64_t>(seed % 17);
  p.shape = static_cast<treecvrp::Shape>(seed % 3);
  return treecvrp::generate(p);
}

}  // namespace fixtures
