#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "treecvrp/classify.hpp"
#include "treecvrp/solver.hpp"

using namespace treecvrp;

namespace {

WorkingTree stabilized(const Instance& inst) {
  WorkingTree t = fixtures::working_heavy(inst);
  std::vector<TourSet> sink;
  detail::stabilize(t, sink);
  return t;
}

}  // namespace

TEST_CASE("two-chain fixture is recognized with ranks by descending length") {
  WorkingTree t = fixtures::working(fixtures::two_chain());
  Vertex stem = t.children(t.root())[0];
  auto label = recognize_chain(t, stem);
  REQUIRE(label.has_value());
  CHECK(label->p == 2);
  REQUIRE(label->levels.size() == 1);
  CHECK(t.edge_len(label->levels[0].spine) == 3);
  CHECK(t.edge_len(label->levels[0].major) == 2);
  CHECK(t.edge_len(label->levels[0].minor) == 1);
  CHECK(label->long_chain);  // all 2-chains are long
}

TEST_CASE("three leaves of demand seven are not a chain") {
  Instance inst = fixtures::make(
      "r", 10, {{"r", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1}},
      {{"a", 7}, {"b", 7}, {"c", 7}});
  WorkingTree t = fixtures::working(inst);
  Vertex stem = t.children(t.root())[0];
  CHECK_FALSE(recognize_chain(t, stem).has_value());  // 21 > 2Q
}

TEST_CASE("stacked fixture is a 3-chain") {
  WorkingTree t = fixtures::working(fixtures::three_chain());
  Vertex stem = t.children(t.root())[0];
  auto label = recognize_chain(t, stem);
  REQUIRE(label.has_value());
  CHECK(label->p == 3);
  REQUIRE(label->levels.size() == 2);
  CHECK(t.demand(label->levels[1].major) == 6);
  CHECK(t.demand(label->levels[1].minor) == 5);
}

TEST_CASE("long versus short at level two") {
  // l(e_2^2)=3 against a root distance of 2: short.
  Instance shorter = fixtures::make(
      "r", 10,
      {{"r", "t", 2}, {"t", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1},
       {"t", "d", 4}, {"t", "e", 3}},
      {{"a", 6}, {"b", 6}, {"c", 6}, {"d", 6}, {"e", 5}});
  WorkingTree ts = fixtures::working(shorter);
  auto short_label = recognize_chain(ts, ts.children(ts.root())[0]);
  REQUIRE(short_label.has_value());
  CHECK_FALSE(short_label->long_chain);
  CHECK_FALSE(is_long(ts, *short_label));

  // l(e_2^2)=1 against a root distance of 2: long.
  Instance longer = fixtures::make(
      "r", 10,
      {{"r", "t", 2}, {"t", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1},
       {"t", "d", 4}, {"t", "e", 1}},
      {{"a", 6}, {"b", 6}, {"c", 6}, {"d", 6}, {"e", 5}});
  WorkingTree tl = fixtures::working(longer);
  auto long_label = recognize_chain(tl, tl.children(tl.root())[0]);
  REQUIRE(long_label.has_value());
  CHECK(long_label->long_chain);
  CHECK(is_long(tl, *long_label));
}

TEST_CASE("classify_branch distinguishes the kinds") {
  Instance one = fixtures::make("r", 10, {{"r", "v", 5}}, {{"v", 7}});
  WorkingTree t1 = fixtures::working(one);
  CHECK(classify_branch(t1, t1.children(t1.root())[0]).kind == BranchKind::OneBranch);

  WorkingTree t2 = fixtures::working(fixtures::two_chain());
  CHECK(classify_branch(t2, t2.children(t2.root())[0]).kind == BranchKind::LongChain);

  Instance four = fixtures::make(
      "r", 10,
      {{"r", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1}, {"s", "d", 2}},
      {{"a", 7}, {"b", 7}, {"c", 7}, {"d", 7}});
  WorkingTree t4 = fixtures::working(four);
  CHECK(classify_branch(t4, t4.children(t4.root())[0]).kind == BranchKind::Other);

  WorkingTree t5 = fixtures::working(fixtures::short_chain_boundary());
  CHECK(classify_branch(t5, t5.children(t5.root())[0]).kind == BranchKind::ShortChain);
}

TEST_CASE("settled roots yield no minimally unsettled branch") {
  Instance inst = fixtures::make(
      "r", 10,
      {{"r", "v", 5}, {"r", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1}},
      {{"v", 7}, {"a", 6}, {"b", 6}, {"c", 6}});
  WorkingTree t = fixtures::working(inst);
  CHECK_FALSE(find_minimally_unsettled(t).has_value());
  for (Vertex c : t.children(t.root())) {
    BranchKind k = classify_branch(t, c).kind;
    CHECK((k == BranchKind::OneBranch || k == BranchKind::LongChain));
  }
}

TEST_CASE("an Other branch with leaf children is minimally unsettled") {
  Instance inst = fixtures::make(
      "r", 10,
      {{"r", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1}, {"s", "d", 2}},
      {{"a", 7}, {"b", 7}, {"c", 7}, {"d", 7}});
  WorkingTree t = stabilized(inst);
  auto found = find_minimally_unsettled(t);
  REQUIRE(found.has_value());
  CHECK(classify_branch(t, *found).kind == BranchKind::Other);
}

TEST_CASE("post-order finds the deepest unsettled branch first") {
  // A short chain nested under an Other branch: the chain is deeper.
  Instance inst = fixtures::make(
      "r", 10,
      {{"r", "u", 1},
       {"u", "t", 1},
       {"t", "s", 1}, {"s", "a", 3}, {"s", "b", 2}, {"s", "c", 1},
       {"t", "d", 2}, {"t", "e", 2},
       {"u", "x", 2}, {"u", "y", 3}, {"u", "z", 4}},
      {{"a", 6}, {"b", 6}, {"c", 6}, {"d", 6}, {"e", 5},
       {"x", 7}, {"y", 7}, {"z", 7}});
  WorkingTree t = stabilized(inst);
  auto found = find_minimally_unsettled(t);
  REQUIRE(found.has_value());
  BranchClass bc = classify_branch(t, *found);
  CHECK(bc.kind == BranchKind::ShortChain);  // the nested short 3-chain, not its parent
}

TEST_CASE("after simplify every 2-branch is a 2-chain") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Instance inst = fixtures::random_instance(seed);
    WorkingTree t = stabilized(inst);
    for (Vertex v : t.post_order()) {
      if (v == t.root() || t.traffic(v) != 2) continue;
      auto label = recognize_chain(t, v);
      REQUIRE(label.has_value());
      CHECK(label->p == 2);
    }
  }
}

TEST_CASE("the sweep agrees with per-branch classification") {
  auto settled_by_classify = [](const WorkingTree& t, Vertex v) {
    BranchKind k = classify_branch(t, v).kind;
    return k == BranchKind::OneBranch || k == BranchKind::LongChain;
  };
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    Instance inst = fixtures::random_instance(seed);
    WorkingTree t = stabilized(inst);
    auto found = find_minimally_unsettled(t);
    if (found) {
      CHECK_FALSE(settled_by_classify(t, *found));
      for (Vertex c : t.children(*found)) CHECK(settled_by_classify(t, c));
    } else {
      for (Vertex v : t.post_order()) {
        if (v == t.root()) continue;
        CHECK(settled_by_classify(t, v));
      }
    }
  }
}

TEST_CASE("recognized labels satisfy the label invariants") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Instance inst = fixtures::random_instance(seed);
    WorkingTree t = stabilized(inst);
    const std::int64_t q = t.capacity();
    for (Vertex v : t.post_order()) {
      if (v == t.root()) continue;
      auto label = recognize_chain(t, v);
      if (!label) continue;
      const ChainLevel& base = label->levels[0];
      CHECK(t.edge_len(base.spine) >= t.edge_len(base.major));
      CHECK(t.edge_len(base.major) >= t.edge_len(base.minor));
      CHECK(t.demand(base.spine) + t.demand(base.minor) > q);
      std::int64_t s1 = t.demand(base.spine) + t.demand(base.major) + t.demand(base.minor);
      CHECK(2 * s1 > 3 * q);
      CHECK(s1 <= 2 * q);
      for (int i = 2; i <= label->p - 1; ++i) {
        const ChainLevel& lv = label->levels[i - 1];
        CHECK(t.edge_len(lv.major) >= t.edge_len(lv.minor));
        std::int64_t pair = t.demand(lv.major) + t.demand(lv.minor);
        CHECK(pair > q);
        CHECK(2 * pair <= 3 * q);
      }
    }
  }
}
