#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "bison/core.hpp"

namespace bison {

// A first-order condition-action rule. Atom args and head args are variable
// indices in [0, n_vars). `val` is the internal priority (0 = closest to the
// goal); the text format displays val + 1.
struct Rule {
  int val = 0;
  int32_t n_vars = 0;
  FactSet scond;
  FactSet gcond;
  int32_t schema = -1;
  std::vector<int32_t> head;
};

struct HLPolicy {
  std::vector<Rule> rules;  // sorted by (val, canonical text)
};

// Renames variables to the canonical first-occurrence order (head first,
// then state atoms, then goal atoms) and sorts the atom sets.
Rule canonicalize(const Rule& r);

// Serialization without the priority prefix; equal up to renaming iff equal.
std::string rule_body(const Domain& d, const Rule& r);
std::string rule_str(const Domain& d, const Rule& r);

// Canonicalizes, merges duplicates keeping the minimum val, and sorts.
HLPolicy make_policy(const Domain& d, std::vector<Rule> rules);

void validate_rule(const Domain& d, const Rule& r);

// True when some variable appears in no condition atom.
bool has_unconstrained_vars(const Rule& r);

// Incremental per-predicate and per-(predicate, position, object) indexes.
class FactIndex {
 public:
  FactIndex() = default;
  explicit FactIndex(size_t n_predicates) : by_pred_(n_predicates) {}

  void reset(size_t n_predicates);
  void insert(const Fact& f);
  void erase(const Fact& f);
  bool contains(const Fact& f) const { return all_.count(f) > 0; }
  size_t size() const { return all_.size(); }
  const std::set<Fact>& with_pred(int32_t p) const { return by_pred_[p]; }
  // Facts of predicate p with `obj` at argument position `pos`; null if none.
  const std::set<Fact>* with_arg(int32_t p, int pos, int32_t obj) const;

 private:
  static uint64_t key(int32_t p, int pos, int32_t obj);
  HLState all_;
  std::vector<std::set<Fact>> by_pred_;
  std::unordered_map<uint64_t, std::set<Fact>> by_arg_;
};

// The state index plus an index over unachieved goal facts (g \ s), kept in
// sync as facts are added and removed.
class MatchContext {
 public:
  MatchContext(const Domain& d, size_t n_objects, const HLState& s,
               const FactSet& goal);

  void add(const Fact& f);
  void remove(const Fact& f);
  void apply(const Domain& d, const GroundAction& a, size_t outcome);

  const FactIndex& state() const { return state_; }
  const FactIndex& open_goals() const { return open_; }
  const HLState& goal() const { return goal_; }
  size_t n_objects() const { return n_objects_; }

 private:
  FactIndex state_;
  FactIndex open_;
  HLState goal_;
  size_t n_objects_;
};

std::optional<std::vector<int32_t>> match_rule(const Rule& r,
                                               const MatchContext& ctx);
// Visits every binding in search order until `visit` returns true.
void for_each_match(
    const Rule& r, const MatchContext& ctx,
    const std::function<bool(const std::vector<int32_t>&)>& visit);
std::optional<std::vector<int32_t>> match_rule(const Domain& d, const Rule& r,
                                               const HLState& s,
                                               const FactSet& goal,
                                               size_t n_objects);

// Ground actions applicable in `s`, in canonical (schema, args) order.
std::vector<GroundAction> applicable_actions(const Domain& d, const HLState& s,
                                             size_t n_objects);

struct Selection {
  GroundAction action;
  size_t rule_index = 0;
  std::vector<int32_t> binding;
  bool applicable = true;  // false flags a policy defect
};

std::optional<Selection> select_action(const Domain& d, const HLPolicy& p,
                                       const MatchContext& ctx);
std::optional<GroundAction> select_action(const Domain& d, const HLPolicy& p,
                                          const HLState& s,
                                          const FactSet& goal,
                                          size_t n_objects);

// Picks the successor outcome index for an applied action.
using OutcomeChooser = std::function<size_t(const GroundAction&, size_t)>;
OutcomeChooser fixed_outcome(size_t index);
OutcomeChooser random_outcome(uint64_t seed);
OutcomeChooser adversarial_outcome();  // always the last listed outcome

enum class SolveStatus { solved, no_action, step_cap };

struct SolveResult {
  SolveStatus status = SolveStatus::no_action;
  std::vector<GroundAction> actions;
  std::vector<size_t> rule_vals;
  size_t policy_defects = 0;
};

SolveResult solve_hl(const Domain& d, const HLPolicy& p, const HLProblem& prob,
                     const OutcomeChooser& choose, size_t step_cap);

}  // namespace bison
