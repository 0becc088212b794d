#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bison/core.hpp"
#include "bison/ll.hpp"
#include "bison/policy.hpp"

namespace bison {

// Maps an LL state to an HL state whose object ids index `state.names`.
using Labelling = std::function<HLState(const LLState&)>;

struct AbstractionGap : std::runtime_error {
  size_t step;
  AbstractionGap(size_t step, const std::string& msg);
};

struct HLTrace {
  FactSet goal;
  std::vector<GroundAction> actions;
  std::vector<size_t> outcomes;  // observed outcome index per action
  std::vector<HLState> states;   // |actions| + 1
  std::vector<size_t> change_steps;  // LL step at which states[i + 1] begins
  bool goal_reached = false;
};

// True when `next` is the outcome-th successor of `cur` under `a`, up to
// extra facts that each mention an object absent from `cur`. Those are
// observations of newly visible objects (open world), not effects.
bool explains(const Domain& d, const HLState& cur, const HLState& next,
              const GroundAction& a, size_t outcome);

HLTrace extract_hl_trace(const Demo& demo, const Domain& d,
                         const Labelling& label);

// One pre-image per outcome, or empty when some outcome deletes a goal fact.
std::vector<FactSet> regress(const Domain& d, const FactSet& goal,
                             const GroundAction& a);

// Fresh variables in first-occurrence order: action args, then state_cond,
// then goal_cond (each in canonical fact order). The returned rule keeps that
// numbering; canonicalize() is applied when it enters a policy.
Rule lift(const GroundAction& a, const FactSet& state_cond,
          const FactSet& goal_cond);

struct LearnConfig {
  size_t max_subgoals = 256;
};

struct LearnStats {
  size_t demos_used = 0;
  size_t demos_skipped = 0;
  size_t unreached_goal_demos = 0;
  size_t subgoals_dropped = 0;
  size_t rules_emitted = 0;
};

HLPolicy learn_from_traces(const std::vector<HLTrace>& traces, const Domain& d,
                           const LearnConfig& cfg = {},
                           LearnStats* stats = nullptr);

HLPolicy learn_hl_policy(const std::vector<Demo>& demos, const Domain& d,
                         const Labelling& label, const LearnConfig& cfg = {},
                         LearnStats* stats = nullptr);

struct CoverageBound {
  uint64_t value = 0;
  bool saturated = false;
};

CoverageBound coverage_bound(uint64_t n_predicates, uint64_t max_pred_arity,
                             uint64_t n_schemata, uint64_t max_schema_arity,
                             uint64_t C);
CoverageBound coverage_bound(const Domain& d, uint64_t C);

}  // namespace bison
