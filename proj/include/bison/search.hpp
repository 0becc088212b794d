#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bison/core.hpp"

namespace bison {

struct Plan {
  std::vector<GroundAction> actions;
  std::vector<size_t> outcomes;  // determinised outcome chosen per step
};

// Explicit state -> action map; keys are sorted fact sets.
struct SearchPolicy {
  std::map<FactSet, GroundAction> map;

  const GroundAction* lookup(const HLState& s) const;
};

struct SearchLimits {
  size_t max_expansions = 1'000'000;
  // Explicit-state search keeps one fact set per generated node; this caps
  // the total number of stored facts (about 20 bytes each).
  size_t max_stored_facts = 50'000'000;
  double time_limit_s = 0;  // 0 = none
};

enum class SearchStatus { solved, unsolvable, budget };

struct SearchStats {
  SearchStatus status = SearchStatus::unsolvable;
  size_t expanded = 0;
  size_t generated = 0;
  size_t ground_actions = 0;
  std::string reason;
};

// All-outcomes determinisation: every (action, outcome) pair that is
// reachable under the delete relaxation from init.
struct DetAction {
  GroundAction action;
  size_t outcome = 0;
  FactSet pre;
  FactSet add;
  FactSet del;
};

std::vector<DetAction> ground_reachable(const Domain& d, const HLProblem& p,
                                        bool* goal_reachable = nullptr);

std::optional<Plan> find_plan(const Domain& d, const HLProblem& p,
                              const SearchLimits& lim = {},
                              SearchStats* stats = nullptr);

// depth_cap == 0 selects the default 4 * |g| * |O|.
std::optional<SearchPolicy> find_policy(const Domain& d, const HLProblem& p,
                                        size_t depth_cap = 0,
                                        const SearchLimits& lim = {},
                                        SearchStats* stats = nullptr);

bool validate_plan(const Domain& d, const HLProblem& p, const Plan& plan);
// Every state reachable from init under the map is a goal state or covered.
bool policy_closed(const Domain& d, const HLProblem& p, const SearchPolicy& pol,
                   size_t depth_cap);

}  // namespace bison
