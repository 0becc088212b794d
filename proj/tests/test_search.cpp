#include <doctest.h>

#include <deque>
#include <map>

#include "bison/bench.hpp"
#include "bison/envs.hpp"
#include "bison/search.hpp"
#include "helpers.hpp"

using namespace bison;
using namespace testutil;

namespace {

// Shortest plan length over the all-outcomes determinisation, or -1.
int bfs_len(const Domain& d, const HLProblem& p, size_t limit = 20000) {
  std::map<FactSet, int> dist;
  std::deque<HLState> q;
  dist[sorted(p.init)] = 0;
  q.push_back(p.init);
  const auto acts = all_ground_actions(d, p.objects.size());
  while (!q.empty() && dist.size() < limit) {
    HLState s = q.front();
    q.pop_front();
    const int ds = dist[sorted(s)];
    if (is_goal(s, p.goal)) return ds;
    for (const auto& a : acts) {
      if (!applicable(d, s, a)) continue;
      for (auto& t : successors(d, s, a)) {
        auto key = sorted(t);
        if (dist.count(key)) continue;
        dist[key] = ds + 1;
        q.push_back(std::move(t));
      }
    }
  }
  return -1;
}

HLProblem example1() {
  const Domain& d = env_domain(EnvKind::pick_place);
  HLProblem p;
  p.objects = {"obj1", "loc1", "loc2"};
  p.init = {Fact(d.predicate_index("rAt"), {1}), Fact(d.predicate_index("at"), {0, 1}),
            Fact(d.predicate_index("free"), {})};
  p.goal = {Fact(d.predicate_index("at"), {0, 2})};
  return p;
}

}  // namespace

TEST_CASE("find_plan") {
  const Domain& d = env_domain(EnvKind::pick_place);
  HLProblem p = example1();
  auto plan = find_plan(d, p);
  REQUIRE(plan);
  REQUIRE(plan->actions.size() == 3);
  CHECK(action_str(d, p.objects, plan->actions[0]) == "(pick obj1 loc1)");
  CHECK(action_str(d, p.objects, plan->actions[1]) == "(move loc1 loc2)");
  CHECK(action_str(d, p.objects, plan->actions[2]) == "(place obj1 loc2)");
  CHECK(validate_plan(d, p, *plan));

  HLProblem solved = p;
  solved.init.insert(p.goal[0]);
  auto empty = find_plan(d, solved);
  REQUIRE(empty);
  CHECK(empty->actions.empty());

  // hold(loc1) needs at(loc1, _), which only place(loc1, _) adds
  HLProblem bad = p;
  bad.goal = {Fact(d.predicate_index("hold"), {1})};
  SearchStats st;
  CHECK_FALSE(find_plan(d, bad, {}, &st));
}

TEST_CASE("find_policy") {
  const Domain& d = env_domain(EnvKind::pick_place);
  HLProblem p = example1();
  HLProblem solved = p;
  solved.init.insert(p.goal[0]);
  auto e = find_policy(d, solved);
  REQUIRE(e);
  CHECK(e->map.empty());

  auto pol = find_policy(d, p);
  REQUIRE(pol);
  CHECK(pol->map.size() == 3);
  CHECK(policy_closed(d, p, *pol, 12));

  // toy: flip succeeds or lands in `stuck`, from which only fix reaches done
  Domain t;
  t.name = "toy";
  t.predicates = {{"done", 0}, {"ready", 0}, {"stuck", 0}};
  t.schemata = {
      {"fix", {}, {Fact(2, {})}, {Outcome{{Fact(0, {})}, {Fact(2, {})}}}},
      {"flip", {}, {Fact(1, {})}, {Outcome{{Fact(0, {})}, {}}, Outcome{{Fact(2, {})}, {Fact(1, {})}}}},
  };
  t.validate();
  HLProblem tp;
  tp.init = {Fact(1, {})};
  tp.goal = {Fact(0, {})};
  auto tpol = find_policy(t, tp, 6);
  REQUIRE(tpol);
  CHECK(tpol->map.size() == 2);
  CHECK(tpol->lookup(HLState{Fact(1, {})}));
  CHECK(tpol->lookup(HLState{Fact(2, {})}));
  CHECK(policy_closed(t, tp, *tpol, 6));
}

TEST_CASE("property: find_plan is sound and complete on small problems") {
  std::mt19937_64 rng(61);
  int solvable = 0;
  for (int c = 0; c < 300; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const auto n = static_cast<int32_t>(1 + pick(rng, 3));
    HLProblem p;
    p.objects = object_names(n);
    p.init = random_state(rng, d, n, 5);
    p.goal = random_atoms(rng, d, n, 3);
    const int len = bfs_len(d, p);
    auto plan = find_plan(d, p);
    CHECK(plan.has_value() == (len >= 0));
    if (plan) {
      ++solvable;
      CHECK(validate_plan(d, p, *plan));
      CHECK(static_cast<int>(plan->actions.size()) >= len);
    }
    auto pol = find_policy(d, p, 8);
    if (pol) CHECK(policy_closed(d, p, *pol, 8));
    if (pol && d.schemata.size() > 0) {
      bool all_det = true;
      for (const auto& s : d.schemata) all_det &= s.deterministic();
      if (all_det) CHECK(len >= 0);
    }
  }
  CHECK(solvable >= 50);
}

TEST_CASE("find_plan exhausts its budget on large Blocks") {
  const Domain& d = env_domain(EnvKind::blocks);
  // every generated state is stored, so memory runs out long before greedy
  // search reaches the goal on large instances
  SearchLimits lim;
  lim.max_stored_facts = 2'000'000;
  SearchStats st;
  CHECK_FALSE(find_plan(d, blocks_hl_instance(100, 1), lim, &st));
  CHECK(st.status == SearchStatus::budget);
  CHECK(find_plan(d, blocks_hl_instance(3, 1), lim));
}
