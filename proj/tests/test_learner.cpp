#include <doctest.h>

#include "bison/envs.hpp"
#include "bison/io.hpp"
#include "bison/learner.hpp"
#include "helpers.hpp"

using namespace bison;
using namespace testutil;

TEST_CASE("extract_hl_trace on pick-place") {
  const Domain& d = env_domain(EnvKind::pick_place);
  auto [at_block, third] = pick_place_demos();
  auto t = extract_hl_trace(at_block, d, env_labelling(EnvKind::pick_place));
  REQUIRE(t.actions.size() == 3);
  CHECK(t.states.size() == 4);
  CHECK(t.goal_reached);
  const auto& n = at_block.steps[0].state.names;
  const std::string goal_loc = at_block.goal[0].args[1];
  CHECK(action_str(d, n, t.actions[0]).rfind("(pick obj1 ", 0) == 0);
  CHECK(d.schemata[t.actions[1].schema].name == "move");
  CHECK(n[t.actions[1].args[0]] == n[t.actions[0].args[1]]);
  CHECK(n[t.actions[1].args[1]] == goal_loc);
  CHECK(action_str(d, n, t.actions[2]) == "(place obj1 " + goal_loc + ")");

  auto t2 = extract_hl_trace(third, d, env_labelling(EnvKind::pick_place));
  CHECK(t2.actions.size() == 4);
}

TEST_CASE("extract_hl_trace edge cases") {
  const Domain& d = env_domain(EnvKind::pick_place);
  auto [demo, unused] = pick_place_demos();
  Demo still;
  still.goal = demo.goal;
  still.steps = {demo.steps[0], demo.steps[0]};
  auto t = extract_hl_trace(still, d, env_labelling(EnvKind::pick_place));
  CHECK(t.actions.empty());
  CHECK(t.states.size() == 1);

  // jump straight from the initial state to the final one
  Demo jump = demo;
  jump.steps[1].state = demo.steps.back().state;
  CHECK_THROWS_AS(extract_hl_trace(jump, d, env_labelling(EnvKind::pick_place)),
                  AbstractionGap);
}

TEST_CASE("regress by hand") {
  const Domain& d = env_domain(EnvKind::pick_place);
  const int at = d.predicate_index("at"), hold = d.predicate_index("hold"),
            rat = d.predicate_index("rAt"), free = d.predicate_index("free");
  // obj1=0, loc1=1, loc2=2
  auto r1 = regress(d, {Fact(at, {0, 2})}, {d.schema_index("place"), {0, 2}});
  CHECK(r1 == std::vector<FactSet>{normalize({Fact(rat, {2}), Fact(hold, {0})})});
  auto r2 = regress(d, normalize({Fact(rat, {2}), Fact(hold, {0})}), {d.schema_index("move"), {1, 2}});
  CHECK(r2 == std::vector<FactSet>{normalize({Fact(hold, {0}), Fact(rat, {1})})});
  CHECK(regress(d, {Fact(free, {})}, {d.schema_index("pick"), {0, 1}}).empty());
}

TEST_CASE("lift") {
  const Domain& d = env_domain(EnvKind::pick_place);
  const int at = d.predicate_index("at"), hold = d.predicate_index("hold"),
            rat = d.predicate_index("rAt");
  Rule r = lift({d.schema_index("place"), {0, 2}}, normalize({Fact(hold, {0}), Fact(rat, {2})}),
                {Fact(at, {0, 2})});
  r.val = 0;
  CHECK(rule_str(d, canonicalize(r)) ==
        "1: (:vars ?v0 ?v1) (:state (hold ?v0) (rAt ?v1)) (:goal (at ?v0 ?v1)) => (place ?v0 ?v1)");

  Rule e = lift({d.schema_index("move"), {5, 3}}, {}, {});
  CHECK(e.n_vars == 2);
  CHECK(e.scond.empty());
  CHECK(e.gcond.empty());

  // distinct objects stay distinct variables
  Rule two = lift({d.schema_index("move"), {1, 2}}, normalize({Fact(rat, {1}), Fact(rat, {2})}), {});
  CHECK(two.n_vars == 2);
  CHECK(two.head == std::vector<int32_t>{0, 1});
}

TEST_CASE("learn: pick-place policy") {
  const Domain& d = env_domain(EnvKind::pick_place);
  auto [at_block, third] = pick_place_demos();
  auto label = env_labelling(EnvKind::pick_place);
  const auto expected = lines(serialize_policy(d, parse_policy(kPickPlacePolicy, d)));

  auto one = lines(serialize_policy(d, learn_hl_policy({at_block}, d, label)));
  CHECK(one == std::vector<std::string>(expected.begin(), expected.begin() + 3));

  auto both = serialize_policy(d, learn_hl_policy({at_block, third}, d, label));
  CHECK(lines(both) == expected);

  CHECK(learn_hl_policy({}, d, label).rules.empty());
}

TEST_CASE("coverage_bound") {
  CHECK(coverage_bound(1, 1, 1, 1, 1).value == 3);
  CHECK(coverage_bound(4, 2, 3, 2, 0).value == 4 * 4);
  CHECK(coverage_bound(5, 3, 2, 2, 0).value == 5 * 27);
  CHECK(coverage_bound(env_domain(EnvKind::pick_place), 1).value == 784);
  auto big = coverage_bound(100, 4, 100, 4, 50);
  CHECK(big.saturated);
}

TEST_CASE("property: regression soundness") {
  std::mt19937_64 rng(31);
  int regressed = 0;
  for (int c = 0; c < 400; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const auto n = static_cast<int32_t>(1 + pick(rng, 4));
    GroundAction a = random_action(rng, d, n);
    FactSet G = random_atoms(rng, d, n, 3);
    auto R = regress(d, G, a);
    const auto& sch = d.schemata[a.schema];
    bool deletes_goal = false;
    for (const auto& o : sch.outcomes)
      for (const auto& f : ground(o.del, a.args))
        deletes_goal |= std::binary_search(G.begin(), G.end(), f);
    CHECK(R.empty() == deletes_goal);
    if (R.empty()) continue;
    ++regressed;
    REQUIRE(R.size() == sch.outcomes.size());
    for (size_t i = 0; i < R.size(); ++i) {
      // any state containing the pre-image reaches G through outcome i
      HLState s = to_state(R[i]);
      for (const auto& f : random_atoms(rng, d, n, 4)) s.insert(f);
      REQUIRE(applicable(d, s, a));
      CHECK(is_goal(successors(d, s, a)[i], G));
      // and the pre-image is minimal: dropping a non-precondition atom breaks it
      const FactSet pre = ground(sch.pre, a.args);
      for (const auto& f : R[i]) {
        if (std::binary_search(pre.begin(), pre.end(), f)) continue;
        HLState t = to_state(R[i]);
        t.erase(f);
        CHECK_FALSE(is_goal(successors(d, t, a)[i], G));
      }
    }
  }
  CHECK(regressed >= 200);
}

TEST_CASE("property: lift round-trip") {
  std::mt19937_64 rng(32);
  for (int c = 0; c < 300; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const auto n = static_cast<int32_t>(1 + pick(rng, 6));
    GroundAction a = random_action(rng, d, n);
    FactSet sc = random_atoms(rng, d, n, 4), gc = random_atoms(rng, d, n, 3);
    Rule r = lift(a, sc, gc);
    validate_rule(d, r);
    // binding: variable -> the object it replaced, recovered by first occurrence
    std::vector<int32_t> b;
    auto see = [&](int32_t o) {
      if (std::find(b.begin(), b.end(), o) == b.end()) b.push_back(o);
    };
    for (auto o : a.args) see(o);
    for (const auto* s : {&sc, &gc})
      for (const auto& f : *s)
        for (int i = 0; i < f.arity; ++i) see(f.args[i]);
    REQUIRE(static_cast<int32_t>(b.size()) == r.n_vars);
    CHECK(ground(r.scond, b) == sc);
    CHECK(ground(r.gcond, b) == gc);
    std::vector<int32_t> head;
    for (auto v : r.head) head.push_back(b[v]);
    CHECK(head == a.args);
    // lifting is invariant under object renaming
    auto f = random_bijection(rng, n);
    Rule rr = lift(rename(a, f), rename(sc, f), rename(gc, f));
    CHECK(rule_body(d, canonicalize(rr)) == rule_body(d, canonicalize(r)));
  }
}

TEST_CASE("property: HL traces of oracle demos are explained") {
  size_t checked = 0;
  for (EnvKind k : {EnvKind::blocks, EnvKind::factory, EnvKind::gacha}) {
    EnvConfig c;
    c.kind = k;
    c.n_objects = k == EnvKind::gacha ? 1 : 3;
    c.seed = 33;
    const Domain& d = env_domain(k);
    for (const auto& demo : generate_demos(c, 70)) {
      auto t = extract_hl_trace(demo, d, env_labelling(k));
      REQUIRE(t.states.size() == t.actions.size() + 1);
      CHECK(t.goal_reached);
      for (size_t i = 0; i < t.actions.size(); ++i)
        CHECK(explains(d, t.states[i], t.states[i + 1], t.actions[i], t.outcomes[i]));
      ++checked;
    }
  }
  CHECK(checked >= 200);
}
