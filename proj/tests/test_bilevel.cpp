#include <doctest.h>

#include <map>

#include "bison/bilevel.hpp"
#include "bison/io.hpp"
#include "bison/learner.hpp"
#include "helpers.hpp"

using namespace bison;
using namespace testutil;

namespace {

const HLPolicy& policy_for(EnvKind k) {
  static std::map<EnvKind, HLPolicy> cache;
  auto it = cache.find(k);
  if (it != cache.end()) return it->second;
  EnvConfig c;
  c.kind = k == EnvKind::blocks_noisy ? EnvKind::blocks : k;
  c.n_objects = k == EnvKind::gacha ? 2 : 3;
  c.seed = 101;
  HLPolicy p = learn_hl_policy(generate_demos(c, 100), env_domain(c.kind), env_labelling(c.kind));
  return cache.emplace(k, std::move(p)).first->second;
}

Executor exec(Strategy s, EnvKind k) {
  Executor ex;
  ex.strategy = s;
  ex.ll.kind = k;
  if (s == Strategy::bison) ex.hl_policy = &policy_for(k);
  return ex;
}

size_t successes(const std::vector<EpisodeResult>& rs) {
  size_t k = 0;
  for (const auto& r : rs) k += r.success;
  return k;
}

EnvConfig cfg(EnvKind k, int n, uint64_t seed, double tp = 0.001) {
  EnvConfig c;
  c.kind = k;
  c.n_objects = n;
  c.seed = seed;
  c.teleport_prob = tp;
  return c;
}

}  // namespace

TEST_CASE("strategy names") {
  for (auto s : {Strategy::bison, Strategy::det_plan, Strategy::det_replan, Strategy::ndt_plan,
                 Strategy::ndt_replan, Strategy::oracle, Strategy::pure_nn_stub})
    CHECK(parse_strategy(strategy_name(s)) == s);
  CHECK_THROWS_AS(parse_strategy("lama"), std::invalid_argument);
  Executor stub;
  stub.strategy = Strategy::pure_nn_stub;
  stub.hl_policy = &policy_for(EnvKind::blocks);
  CHECK_THROWS_AS(stub.validate(), std::invalid_argument);
  Executor nohl;
  CHECK_THROWS_AS(nohl.validate(), std::invalid_argument);
}

TEST_CASE("solved at reset") {
  EnvConfig c = cfg(EnvKind::blocks, 1, 3);
  for (auto s : {Strategy::bison, Strategy::det_plan, Strategy::det_replan, Strategy::ndt_plan,
                 Strategy::ndt_replan, Strategy::oracle}) {
    Env e(c);
    LLState o = e.state();
    o.objects[0][feat::kX] = o.objects[1][feat::kX];
    o.objects[0][feat::kY] = o.objects[1][feat::kY];
    e.set_state(o);
    auto r = run_episode(e, exec(s, EnvKind::blocks));
    CHECK(r.success);
    CHECK(r.ll_steps == 0);
    CHECK(r.hl_queries == 0);
  }
}

TEST_CASE("bison on blocks") {
  Env e(cfg(EnvKind::blocks, 3, 5));
  auto r = run_episode(e, exec(Strategy::bison, EnvKind::blocks));
  CHECK(r.success);
  CHECK(r.ll_steps <= 2048 * 3);

  Executor capped = exec(Strategy::bison, EnvKind::blocks);
  capped.step_cap = 1;
  Env e2(cfg(EnvKind::blocks, 3, 5));
  auto r2 = run_episode(e2, capped);
  CHECK_FALSE(r2.success);
  CHECK(r2.failure_kind == FailureKind::step_cap);
  CHECK(r2.ll_steps == 1);
}

TEST_CASE("planner baselines") {
  auto det = run_episodes(cfg(EnvKind::blocks, 3, 6), exec(Strategy::det_plan, EnvKind::blocks), 5);
  CHECK(successes(det) == 5);
  for (const auto& r : det) CHECK(r.replans == 0);
  auto rep = run_episodes(cfg(EnvKind::blocks, 3, 6), exec(Strategy::det_replan, EnvKind::blocks), 5);
  for (const auto& r : rep) CHECK(r.replans == 0);
  CHECK(successes(run_episodes(cfg(EnvKind::blocks, 3, 6), exec(Strategy::ndt_plan, EnvKind::blocks), 5)) == 5);

  const EnvConfig noisy = cfg(EnvKind::blocks_noisy, 3, 7, 0.002);
  auto dp = run_episodes(noisy, exec(Strategy::det_plan, EnvKind::blocks_noisy), 50);
  auto dr = run_episodes(noisy, exec(Strategy::det_replan, EnvKind::blocks_noisy), 50);
  auto np = run_episodes(noisy, exec(Strategy::ndt_plan, EnvKind::blocks_noisy), 50);
  auto nr = run_episodes(noisy, exec(Strategy::ndt_replan, EnvKind::blocks_noisy), 50);
  size_t broken = 0;
  for (const auto& r : dp) broken += r.failure_kind == FailureKind::plan_broken;
  CHECK(broken > 0);
  CHECK(successes(dr) > successes(dp));
  CHECK(successes(nr) > successes(np));

  // hidden box contents give the planners nothing to plan with
  for (auto s : {Strategy::det_plan, Strategy::det_replan, Strategy::ndt_plan, Strategy::ndt_replan}) {
    auto g = run_episodes(cfg(EnvKind::gacha, 1, 8), exec(s, EnvKind::gacha), 3);
    for (const auto& r : g) {
      CHECK_FALSE(r.success);
      CHECK(r.failure_kind == FailureKind::no_hl_action);
    }
  }
}

TEST_CASE("det_plan equals det_replan without noise") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const EnvConfig c = cfg(EnvKind::blocks_noisy, 2, seed, 0.0);
    Env a(c), b(c);
    auto ra = run_episode(a, exec(Strategy::det_plan, EnvKind::blocks_noisy));
    auto rb = run_episode(b, exec(Strategy::det_replan, EnvKind::blocks_noisy));
    CHECK(ra.success == rb.success);
    CHECK(ra.ll_steps == rb.ll_steps);
    CHECK(rb.replans == 0);
    CHECK(a.world() == b.world());
  }
}

TEST_CASE("property: episode invariants") {
  std::mt19937_64 rng(102);
  const EnvKind kinds[] = {EnvKind::blocks, EnvKind::blocks_noisy, EnvKind::factory, EnvKind::gacha};
  const Strategy strats[] = {Strategy::bison, Strategy::oracle, Strategy::det_plan,
                             Strategy::det_replan, Strategy::ndt_plan, Strategy::ndt_replan};
  std::map<FailureKind, size_t> seen;
  for (int c = 0; c < 240; ++c) {
    CAPTURE(c);
    const EnvKind k = kinds[pick(rng, 4)];
    const Strategy s = strats[pick(rng, 6)];
    const int n = static_cast<int>(1 + pick(rng, k == EnvKind::gacha ? 2 : 3));
    Executor ex = exec(s, k);
    if (coin(rng, 0.2)) ex.step_cap = 1 + pick(rng, 200);
    Env e(cfg(k, n, rng(), 0.01));
    auto r = run_episode(e, ex);
    ++seen[r.failure_kind];
    CHECK(r.success == (r.failure_kind == FailureKind::none));
    CHECK(r.ll_queries == r.ll_steps);
    CHECK(r.ll_steps <= (ex.step_cap ? ex.step_cap : e.config().step_cap()));
    CHECK(r.hl_actions_fired <= r.ll_steps);
    if (r.success) CHECK(is_goal(e.label(), e.goal()));
    if (s == Strategy::bison || s == Strategy::oracle) {
      // one HL query per LL step, plus the query that ended a failed run
      CHECK(r.hl_queries == r.ll_steps + (r.success ? 0 : 1));
    }
    if (s == Strategy::det_plan || s == Strategy::ndt_plan) CHECK(r.replans == 0);
  }
  CHECK(seen[FailureKind::none] > 0);
  CHECK(seen[FailureKind::step_cap] > 0);
  CHECK(seen[FailureKind::no_hl_action] > 0);
}

TEST_CASE("property: oracle demos satisfy NDRP under the learned policy") {
  size_t checked = 0;
  for (EnvKind k : {EnvKind::blocks, EnvKind::factory, EnvKind::gacha}) {
    EnvConfig c = cfg(k, k == EnvKind::gacha ? 2 : 3, 103);
    const Domain& d = env_domain(k);
    for (const auto& demo : generate_demos(c, 70)) {
      auto rep = check_ndrp(d, demo, env_labelling(k), policy_for(k));
      CHECK_MESSAGE(rep.ok, rep.reason);
      ++checked;
    }
  }
  CHECK(checked >= 200);
}

TEST_CASE("NDRP detects a skipped abstract state") {
  EnvConfig c = cfg(EnvKind::blocks, 2, 104);
  const Domain& d = env_domain(EnvKind::blocks);
  auto demos = generate_demos(c, 1);
  Demo still = demos[0];
  still.steps.resize(1);
  still.steps.push_back(still.steps[0]);
  CHECK(check_ndrp(d, still, env_labelling(EnvKind::blocks), policy_for(EnvKind::blocks)).ok);

  Demo jump = demos[0];
  jump.steps[1].state = jump.steps.back().state;
  auto rep = check_ndrp(d, jump, env_labelling(EnvKind::blocks), policy_for(EnvKind::blocks));
  CHECK_FALSE(rep.ok);
  CHECK(rep.step == 0);
}

TEST_CASE("oracle is the upper bound on blocks") {
  for (int n = 1; n <= 10; ++n) {
    auto rs = run_episodes(cfg(EnvKind::blocks, n, 105), exec(Strategy::oracle, EnvKind::blocks), 10);
    CHECK(successes(rs) == 10);
  }
}

TEST_CASE("run_episodes is independent of the worker count") {
  const EnvConfig c = cfg(EnvKind::blocks_noisy, 2, 106, 0.01);
  auto a = run_episodes(c, exec(Strategy::bison, EnvKind::blocks_noisy), 8, 1);
  auto b = run_episodes(c, exec(Strategy::bison, EnvKind::blocks_noisy), 8, 4);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].success == b[i].success);
    CHECK(a[i].ll_steps == b[i].ll_steps);
  }
  CHECK(run_episodes(c, exec(Strategy::bison, EnvKind::blocks_noisy), 0).empty());
}
