#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bison/envs.hpp"
#include "bison/gnn.hpp"
#include "bison/policy.hpp"
#include "bison/search.hpp"

namespace bison {

enum class Strategy { bison, det_plan, det_replan, ndt_plan, ndt_replan, oracle, pure_nn_stub };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& s);  // throws std::invalid_argument

enum class FailureKind { none, no_hl_action, step_cap, plan_broken };

const char* failure_name(FailureKind k);

struct EpisodeResult {
  bool success = false;
  size_t ll_steps = 0;
  size_t hl_actions_fired = 0;  // times the active HL action changed
  size_t replans = 0;
  double wall_time = 0;
  FailureKind failure_kind = FailureKind::none;
  size_t hl_queries = 0;
  size_t ll_queries = 0;
};

// LL policy: the scripted skill for the chosen HL action, or a trained GNN.
struct LLController {
  EnvKind kind = EnvKind::blocks;
  const GnnParams* gnn = nullptr;  // null = oracle skill

  LLAction act(const Domain& d, const LLState& s, const GroundAction& a,
               const FactSet& goal, const HLState& hl) const;
};

struct Executor {
  Strategy strategy = Strategy::bison;
  const HLPolicy* hl_policy = nullptr;  // bison, pure_nn_stub
  LLController ll;
  SearchLimits limits{};                // planner baselines
  size_t step_cap = 0;                  // 0 = env cap (2048 n)

  void validate() const;  // throws std::invalid_argument
};

// Runs one episode from env's current state. env must be freshly reset.
EpisodeResult run_episode(Env& env, const Executor& ex);

// Episode i uses env seed episode_seed(cfg.seed, i); results in episode order.
std::vector<EpisodeResult> run_episodes(const EnvConfig& cfg, const Executor& ex,
                                        size_t episodes, size_t jobs = 1);

struct NdrpReport {
  bool ok = true;
  size_t step = 0;  // offending LL transition
  std::string reason;
};

// Each LL transition must keep the abstraction or realise an outcome of the
// action the policy selects at the source abstraction. Newly visible objects
// are allowed as in explains().
NdrpReport check_ndrp(const Domain& d, const std::vector<LLState>& states,
                      const Labelling& label, const HLPolicy& pol,
                      const FactSet& goal);
NdrpReport check_ndrp(const Domain& d, const Demo& demo, const Labelling& label,
                      const HLPolicy& pol);

}  // namespace bison
