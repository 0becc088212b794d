#include "bison/bilevel.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "bison/io.hpp"
#include "bison/learner.hpp"
#include "bison/log.hpp"

namespace bison {

namespace {

constexpr std::pair<Strategy, const char*> kStrategies[] = {
    {Strategy::bison, "bison"},           {Strategy::det_plan, "det_plan"},
    {Strategy::det_replan, "det_replan"}, {Strategy::ndt_plan, "ndt_plan"},
    {Strategy::ndt_replan, "ndt_replan"}, {Strategy::oracle, "oracle"},
    {Strategy::pure_nn_stub, "pure_nn_stub"},
};

using Clock = std::chrono::steady_clock;

HLProblem problem_of(const Env& env, const HLState& hl) {
  HLProblem p;
  p.objects = env.state().names;
  p.init = hl;
  p.goal = env.goal();
  return p;
}

// Shared loop bookkeeping for all strategies.
struct Run {
  Env& env;
  const Executor& ex;
  EpisodeResult r;
  size_t cap;
  std::optional<GroundAction> last;

  Run(Env& e, const Executor& x) : env(e), ex(x) {
    cap = x.step_cap ? x.step_cap : e.config().step_cap();
  }

  // Returns false once the step cap is hit.
  bool step(const GroundAction& a, const FactSet& goal, const HLState& hl) {
    if (r.ll_steps >= cap) {
      r.failure_kind = FailureKind::step_cap;
      return false;
    }
    if (!last || *last != a) ++r.hl_actions_fired;
    last = a;
    ++r.ll_queries;
    env.step(ex.ll.act(env.domain(), env.state(), a, goal, hl));
    ++r.ll_steps;
    return true;
  }

  void fail(FailureKind k) { r.failure_kind = k; }
  void succeed() {
    r.success = true;
    r.failure_kind = FailureKind::none;
  }
};

void run_bison(Run& run) {
  const Domain& d = run.env.domain();
  while (true) {
    const HLState hl = run.env.label();
    const FactSet goal = run.env.goal();
    if (is_goal(hl, goal)) return run.succeed();
    ++run.r.hl_queries;
    auto a = select_action(d, *run.ex.hl_policy, hl, goal, run.env.state().names.size());
    if (!a) return run.fail(FailureKind::no_hl_action);
    if (!run.step(*a, goal, hl)) return;
  }
}

void run_oracle(Run& run) {
  const EnvKind k = run.env.config().kind;
  while (true) {
    const HLState hl = run.env.label();
    const FactSet goal = run.env.goal();
    if (is_goal(hl, goal)) return run.succeed();
    ++run.r.hl_queries;
    auto a = scripted_choice(k, run.env.state(), hl, goal);
    if (!a) return run.fail(FailureKind::no_hl_action);
    if (run.r.ll_steps >= run.cap) return run.fail(FailureKind::step_cap);
    if (!run.last || *run.last != *a) ++run.r.hl_actions_fired;
    run.last = *a;
    ++run.r.ll_queries;
    run.env.step(skill(k, run.env.state(), *a));
    ++run.r.ll_steps;
  }
}

// Algs. 2 and 3: follow a determinised plan, advancing at most one action.
void run_det(Run& run, bool replan) {
  const Domain& d = run.env.domain();
  auto plan_from = [&](const HLState& hl) {
    SearchStats st;
    auto p = find_plan(d, problem_of(run.env, hl), run.ex.limits, &st);
    if (!p) log::debug("det: no plan ({})", st.reason);
    return p;
  };
  HLState hl = run.env.label();
  if (is_goal(hl, run.env.goal())) return run.succeed();
  auto plan = plan_from(hl);
  if (!plan) return run.fail(FailureKind::no_hl_action);
  size_t i = 0;
  bool fresh = true;  // plan computed at the current state, no step since
  while (true) {
    hl = run.env.label();
    const FactSet goal = run.env.goal();
    if (is_goal(hl, goal)) return run.succeed();
    const auto& acts = plan->actions;
    ++run.r.hl_queries;
    const GroundAction* a = nullptr;
    if (i < acts.size() && applicable(d, hl, acts[i])) {
      a = &acts[i];
    } else if (i + 1 < acts.size() && applicable(d, hl, acts[i + 1])) {
      a = &acts[++i];
    } else if (!replan || fresh) {
      return run.fail(FailureKind::plan_broken);
    } else {
      ++run.r.replans;
      plan = plan_from(hl);
      if (!plan) return run.fail(FailureKind::no_hl_action);
      i = 0;
      fresh = true;
      continue;
    }
    if (!run.step(*a, goal, hl)) return;
    fresh = false;
  }
}

// Algs. 4 and 5: execute an explicit state -> action policy.
void run_ndt(Run& run, bool replan) {
  const Domain& d = run.env.domain();
  auto policy_from = [&](const HLState& hl) {
    SearchStats st;
    auto p = find_policy(d, problem_of(run.env, hl), 0, run.ex.limits, &st);
    if (!p) log::debug("ndt: no policy ({})", st.reason);
    return p;
  };
  HLState hl = run.env.label();
  if (is_goal(hl, run.env.goal())) return run.succeed();
  auto pol = policy_from(hl);
  if (!pol) return run.fail(FailureKind::no_hl_action);
  bool fresh = true;
  while (true) {
    hl = run.env.label();
    const FactSet goal = run.env.goal();
    if (is_goal(hl, goal)) return run.succeed();
    ++run.r.hl_queries;
    const GroundAction* a = pol->lookup(hl);
    if (!a) {
      if (!replan || fresh) return run.fail(FailureKind::plan_broken);
      ++run.r.replans;
      pol = policy_from(hl);
      if (!pol) return run.fail(FailureKind::no_hl_action);
      fresh = true;
      continue;
    }
    const GroundAction act = *a;
    if (!run.step(act, goal, hl)) return;
    fresh = false;
  }
}

}  // namespace

std::string strategy_name(Strategy s) {
  for (const auto& [k, n] : kStrategies)
    if (k == s) return n;
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  for (const auto& [k, n] : kStrategies)
    if (s == n) return k;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

const char* failure_name(FailureKind k) {
  switch (k) {
    case FailureKind::none: return "none";
    case FailureKind::no_hl_action: return "no_hl_action";
    case FailureKind::step_cap: return "step_cap";
    case FailureKind::plan_broken: return "plan_broken";
  }
  return "?";
}

LLAction LLController::act(const Domain& d, const LLState& s, const GroundAction& a,
                           const FactSet& goal, const HLState& hl) const {
  if (!gnn) return skill(kind, s, a);
  return forward(*gnn, encode(d, s, a, goal, hl, gnn->zero_action));
}

void Executor::validate() const {
  if ((strategy == Strategy::bison || strategy == Strategy::pure_nn_stub) && !hl_policy)
    throw std::invalid_argument(strategy_name(strategy) + " needs an HL policy");
  if (strategy == Strategy::pure_nn_stub && (!ll.gnn || !ll.gnn->zero_action))
    throw std::invalid_argument("pure_nn_stub needs GNN params trained with zeroed action features");
}

EpisodeResult run_episode(Env& env, const Executor& ex) {
  ex.validate();
  const auto t0 = Clock::now();
  Run run(env, ex);
  switch (ex.strategy) {
    case Strategy::bison:
    case Strategy::pure_nn_stub: run_bison(run); break;
    case Strategy::oracle: run_oracle(run); break;
    case Strategy::det_plan: run_det(run, false); break;
    case Strategy::det_replan: run_det(run, true); break;
    case Strategy::ndt_plan: run_ndt(run, false); break;
    case Strategy::ndt_replan: run_ndt(run, true); break;
  }
  run.r.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return run.r;
}

std::vector<EpisodeResult> run_episodes(const EnvConfig& cfg, const Executor& ex,
                                        size_t episodes, size_t jobs) {
  ex.validate();
  std::vector<EpisodeResult> out(episodes);
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (size_t i; (i = next++) < episodes;) {
      try {
        EnvConfig c = cfg;
        c.seed = episode_seed(cfg.seed, i);
        Env env(c);
        out[i] = run_episode(env, ex);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  jobs = std::max<size_t>(1, std::min(jobs, episodes));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

NdrpReport check_ndrp(const Domain& d, const std::vector<LLState>& states,
                      const Labelling& label, const HLPolicy& pol, const FactSet& goal) {
  if (states.empty()) return {};
  const size_t n_objects = states[0].names.size();
  HLState cur = label(states[0]);
  for (size_t j = 0; j + 1 < states.size(); ++j) {
    HLState next = label(states[j + 1]);
    if (next == cur) continue;
    auto a = select_action(d, pol, cur, goal, n_objects);
    if (!a) return {false, j, "policy selects no action"};
    if (!applicable(d, cur, *a)) return {false, j, "selected action not applicable"};
    bool ok = false;
    for (size_t o = 0; o < d.schemata[a->schema].outcomes.size() && !ok; ++o)
      ok = explains(d, cur, next, *a, o);
    if (!ok)
      return {false, j, "transition is not an outcome of " +
                            action_str(d, states[0].names, *a)};
    cur = std::move(next);
  }
  return {};
}

NdrpReport check_ndrp(const Domain& d, const Demo& demo, const Labelling& label,
                      const HLPolicy& pol) {
  if (demo.steps.empty()) return {};
  std::vector<LLState> states;
  states.reserve(demo.steps.size());
  for (const auto& s : demo.steps) states.push_back(s.state);
  return check_ndrp(d, states, label, pol, resolve(d, demo.steps[0].state.names, demo.goal));
}

}  // namespace bison
