#include <doctest.h>

#include "bison/bench.hpp"
#include "bison/core.hpp"
#include "bison/envs.hpp"
#include "bison/io.hpp"
#include "helpers.hpp"

using namespace bison;
using namespace testutil;

namespace {

// objects: obj1=0, loc1=1, loc2=2
struct PP {
  const Domain& d = env_domain(EnvKind::pick_place);
  int at = d.predicate_index("at"), free = d.predicate_index("free"),
      hold = d.predicate_index("hold"), rat = d.predicate_index("rAt");
  int pick = d.schema_index("pick"), move = d.schema_index("move"),
      place = d.schema_index("place");
};

}  // namespace

TEST_CASE("applicable") {
  PP p;
  HLState s{Fact(p.rat, {1}), Fact(p.at, {0, 1}), Fact(p.free, {})};
  CHECK(applicable(p.d, s, {p.pick, {0, 1}}));
  CHECK_FALSE(applicable(p.d, HLState{Fact(p.rat, {2})}, {p.pick, {0, 1}}));

  Domain d;
  d.predicates = {{"q", 0}};
  d.schemata = {{"noop", {}, {}, {Outcome{}}}};
  CHECK(applicable(d, HLState{}, {0, {}}));
  CHECK(applicable(d, HLState{Fact(0, {})}, {0, {}}));
}

TEST_CASE("successors") {
  PP p;
  HLState s{Fact(p.rat, {1}), Fact(p.at, {0, 1}), Fact(p.free, {})};
  auto succ = successors(p.d, s, {p.pick, {0, 1}});
  REQUIRE(succ.size() == 1);
  CHECK(succ[0] == HLState{Fact(p.rat, {1}), Fact(p.hold, {0})});
  CHECK_THROWS_AS(successors(p.d, HLState{}, {p.pick, {0, 1}}), PreconditionError);

  const Domain& g = env_domain(EnvKind::gacha);
  const int closed = g.predicate_index("closed"), clear = g.predicate_index("clear"),
            free = g.predicate_index("gripperFree");
  HLState gs{Fact(closed, {0}), Fact(clear, {0}), Fact(free, {})};
  auto two = successors(g, gs, {g.schema_index("roll"), {0, 1}});
  REQUIRE(two.size() == 2);
  CHECK(two[0] != two[1]);
}

TEST_CASE("is_goal") {
  PP p;
  CHECK(is_goal(HLState{Fact(p.free, {})}, {}));
  CHECK(is_goal(HLState{Fact(p.at, {0, 2}), Fact(p.rat, {2}), Fact(p.free, {})},
                {Fact(p.at, {0, 2})}));
  CHECK_FALSE(is_goal(HLState{Fact(p.hold, {0})}, {Fact(p.at, {0, 2})}));
}

TEST_CASE("rename") {
  PP p;
  const FactSet s{Fact(p.at, {0, 1})};
  CHECK(rename(s, {0, 1, 2}) == s);
  // obj1 -> b (2), loc1 -> pad (0)
  CHECK(rename(s, {2, 0, 1}) == FactSet{Fact(p.at, {2, 0})});
  CHECK_THROWS(check_bijection({0, 0, 1}));
}

TEST_CASE("property: rename then inverse is the identity") {
  std::mt19937_64 rng(11);
  for (int c = 0; c < 300; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const auto n = static_cast<int32_t>(1 + pick(rng, 6));
    HLState s = random_state(rng, d, n, 8);
    auto f = random_bijection(rng, n);
    CHECK(rename(rename(s, f), inverse(f)) == s);
    GroundAction a = random_action(rng, d, n);
    CHECK(rename(rename(a, f), inverse(f)) == a);
    // preconditions and effects commute with renaming
    CHECK(applicable(d, s, a) == applicable(d, rename(s, f), rename(a, f)));
    if (applicable(d, s, a)) {
      auto lhs = successors(d, rename(s, f), rename(a, f));
      auto rhs = successors(d, s, a);
      REQUIRE(lhs.size() == rhs.size());
      for (size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == rename(rhs[i], f));
    }
  }
}

TEST_CASE("equivalent") {
  auto p1 = blocks_hl_instance(1, 3);
  auto w = equivalent(p1, p1);
  REQUIRE(w);
  CHECK(*w == std::vector<int32_t>{0, 1, 2});

  auto f = std::vector<int32_t>{2, 0, 1};
  HLProblem p2 = rename(p1, f);
  auto w2 = equivalent(p1, p2);
  REQUIRE(w2);
  CHECK(rename(p1, *w2).init == p2.init);
  CHECK(rename(p1, *w2).goal == p2.goal);

  CHECK_FALSE(equivalent(p1, blocks_hl_instance(2, 3)));
}

TEST_CASE("property: equivalent finds a witness for renamed problems") {
  std::mt19937_64 rng(12);
  for (int c = 0; c < 200; ++c) {
    CAPTURE(c);
    Domain d = random_domain(rng);
    const auto n = static_cast<int32_t>(1 + pick(rng, 5));
    HLProblem p;
    p.objects = object_names(n);
    p.init = random_state(rng, d, n, 6);
    p.goal = random_atoms(rng, d, n, 3);
    auto f = random_bijection(rng, n);
    HLProblem q = rename(p, f);
    auto w = equivalent(p, q);
    REQUIRE(w);
    CHECK(rename(p.init, *w) == q.init);
    CHECK(rename(p.goal, *w) == q.goal);
    // adding a fact to one side only breaks equivalence unless it was there
    Fact extra = random_atom(rng, d, n);
    if (!q.init.count(extra)) {
      HLProblem q2 = q;
      q2.init.insert(extra);
      CHECK_FALSE(equivalent(p, q2));
    }
  }
}

TEST_CASE("domain validation rejects bad schemata") {
  Domain d;
  d.predicates = {{"p", 1}};
  ActionSchema a{"a", {"x"}, {Fact(0, {1})}, {Outcome{}}};
  d.schemata = {a};
  CHECK_THROWS_AS(d.validate(), StructuralError);
  d.schemata[0].pre = {Fact(0, {0})};
  d.schemata[0].outcomes.clear();
  CHECK_THROWS_AS(d.validate(), StructuralError);
  d.schemata[0].outcomes = {Outcome{{Fact(0, {0})}, {Fact(0, {0})}}};
  CHECK_THROWS_AS(d.validate(), StructuralError);
}
