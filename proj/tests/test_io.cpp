#include <doctest.h>

#include "bison/envs.hpp"
#include "bison/io.hpp"
#include "bison/learner.hpp"
#include "helpers.hpp"

using namespace bison;
using namespace testutil;

TEST_CASE("parse_domain") {
  Domain d = parse_domain(env_domain_text(EnvKind::pick_place));
  CHECK(d.predicates.size() == 4);
  CHECK(d.schemata.size() == 3);
  for (const auto& a : d.schemata) CHECK(a.deterministic());

  Domain e = parse_domain("(define (domain e) (:predicates))");
  CHECK(e.predicates.empty());

  CHECK_THROWS(parse_domain(R"((define (domain bad) (:predicates (p ?x))
    (:action a :parameters (?x) :precondition (and) :effect (and (p ?y)))))"));
  CHECK_THROWS_AS(parse_domain("(define (domain bad) (:predicates (p ?x))"), ParseError);
}

TEST_CASE("parse_traces") {
  CHECK(parse_traces("").empty());
  auto one = parse_traces(
      "{goal: [(at b0 p0)], steps: [{ego: [0.5, 0.5, 1], objects: {b0: [0, 0], p0: [1, 1]}, "
      "action: [1, 0, 0]}, {ego: [0.52, 0.5, 1], objects: {b0: [0, 0], p0: [1, 1]}, action: []}]}\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].steps.size() == 2);
  CHECK(one[0].goal == std::vector<NamedAtom>{{"at", {"b0", "p0"}}});
  CHECK_THROWS(parse_traces(
      "{goal: [], steps: [{ego: [0.5], objects: {b0: [0, 0], p0: [1]}, action: []}]}\n"));
}

TEST_CASE("policy serialization of the place rule") {
  const Domain& d = env_domain(EnvKind::pick_place);
  auto p = parse_policy("1: (:vars ?x ?l) (:state (hold ?x) (rAt ?l)) (:goal (at ?x ?l)) => (place ?x ?l)\n", d);
  REQUIRE(p.rules.size() == 1);
  CHECK(serialize_policy(d, p) ==
        "1: (:vars ?v0 ?v1) (:state (hold ?v0) (rAt ?v1)) (:goal (at ?v0 ?v1)) => (place ?v0 ?v1)\n");
  CHECK(serialize_policy(d, HLPolicy{}).empty());
  CHECK(parse_policy("", d).rules.empty());
}

TEST_CASE("property: domain round-trip") {
  std::mt19937_64 rng(21);
  for (int c = 0; c < 250; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const std::string text = serialize_domain(d);
    Domain back = parse_domain(text);
    CHECK(back == d);
    CHECK(serialize_domain(back) == text);
  }
}

TEST_CASE("property: problem round-trip") {
  std::mt19937_64 rng(22);
  for (int c = 0; c < 250; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const auto n = static_cast<int32_t>(1 + pick(rng, 6));
    HLProblem p;
    p.objects = object_names(n);
    p.init = random_state(rng, d, n, 8);
    p.goal = random_atoms(rng, d, n, 4);
    HLProblem back = parse_problem(serialize_problem(d, p), d);
    CHECK(back == p);
  }
}

TEST_CASE("property: policy round-trip") {
  std::mt19937_64 rng(23);
  for (int c = 0; c < 250; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    std::vector<Rule> rules;
    const size_t k = pick(rng, 5);
    for (size_t i = 0; i < k; ++i) rules.push_back(random_rule(rng, d));
    HLPolicy p = make_policy(d, rules);
    const std::string text = serialize_policy(d, p);
    HLPolicy back = parse_policy(text, d);
    CHECK(serialize_policy(d, back) == text);
    REQUIRE(back.rules.size() == p.rules.size());
    for (size_t i = 0; i < p.rules.size(); ++i) {
      CHECK(back.rules[i].val == p.rules[i].val);
      CHECK(rule_body(d, back.rules[i]) == rule_body(d, p.rules[i]));
    }
  }
}

TEST_CASE("property: trace round-trip") {
  std::mt19937_64 rng(24);
  for (int c = 0; c < 250; ++c) {
    CAPTURE(c);
    const size_t n_obj = 1 + pick(rng, 4), m = 1 + pick(rng, 5), n_ego = 1 + pick(rng, 3);
    auto names = object_names(n_obj);
    Demo demo;
    if (coin(rng)) demo.goal.push_back({"at", {names[0], names[n_obj - 1]}});
    if (coin(rng)) demo.goal.push_back({"free", {}});
    const size_t steps = 1 + pick(rng, 4);
    for (size_t s = 0; s < steps; ++s) {
      DemoStep st;
      st.state.names = names;
      for (size_t i = 0; i < n_ego; ++i) st.state.ego.push_back(uniform01(rng) * 2 - 1);
      for (size_t o = 0; o < n_obj; ++o) {
        std::vector<double> v;
        for (size_t i = 0; i < m; ++i) v.push_back(coin(rng, 0.3) ? 0.0 : (uniform01(rng) - 0.5) * 1e3);
        st.state.objects.push_back(v);
      }
      if (s + 1 < steps)
        for (size_t i = 0; i < 3; ++i) st.action.push_back(uniform01(rng) * 2 - 1);
      demo.steps.push_back(std::move(st));
    }
    std::vector<Demo> demos{demo};
    if (coin(rng)) demos.push_back(demo);
    auto back = parse_traces(serialize_traces(demos));
    CHECK(back == demos);
  }
}

TEST_CASE("learned policy round-trip") {
  EnvConfig c;
  c.n_objects = 3;
  c.seed = 4;
  auto demos = generate_demos(c, 20);
  const Domain& d = env_domain(EnvKind::blocks);
  HLPolicy p = learn_hl_policy(demos, d, env_labelling(EnvKind::blocks));
  REQUIRE(!p.rules.empty());
  HLPolicy back = parse_policy(serialize_policy(d, p), d);
  REQUIRE(back.rules.size() == p.rules.size());
  for (size_t i = 0; i < p.rules.size(); ++i)
    CHECK(rule_str(d, back.rules[i]) == rule_str(d, p.rules[i]));
}
