#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace bison {

constexpr int kMaxArity = 4;

struct StructuralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A ground fact (args are object ids) or a lifted atom (args are variable
// indices of the enclosing schema or rule). Unused arg slots stay zero so the
// defaulted comparison is a total order on (pred, arity, args).
struct Fact {
  int32_t pred = -1;
  int32_t arity = 0;
  std::array<int32_t, kMaxArity> args{};

  Fact() = default;
  Fact(int32_t p, std::initializer_list<int32_t> a);
  Fact(int32_t p, const std::vector<int32_t>& a);

  auto operator<=>(const Fact&) const = default;
};

struct FactHash {
  size_t operator()(const Fact& f) const noexcept;
};

using HLState = std::unordered_set<Fact, FactHash>;
using FactSet = std::vector<Fact>;  // sorted, unique

FactSet sorted(const HLState& s);
FactSet normalize(FactSet v);
HLState to_state(const FactSet& v);
uint64_t state_hash(const HLState& s);

struct Predicate {
  std::string name;
  int arity = 0;

  bool operator==(const Predicate&) const = default;
};

struct Outcome {
  FactSet add;
  FactSet del;

  bool operator==(const Outcome&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<std::string> vars;
  FactSet pre;
  std::vector<Outcome> outcomes;

  bool deterministic() const { return outcomes.size() == 1; }
  bool operator==(const ActionSchema&) const = default;
};

// Predicates are kept sorted by name so predicate ids give the canonical
// fact order used for serialization and tie-breaking.
struct Domain {
  std::string name;
  std::vector<Predicate> predicates;
  std::vector<ActionSchema> schemata;

  int predicate_index(std::string_view n) const;
  int schema_index(std::string_view n) const;
  int max_predicate_arity() const;
  int max_schema_arity() const;
  void validate() const;
  bool operator==(const Domain&) const = default;
};

struct GroundAction {
  int32_t schema = -1;
  std::vector<int32_t> args;

  auto operator<=>(const GroundAction&) const = default;
};

struct HLProblem {
  std::vector<std::string> objects;
  HLState init;
  FactSet goal;

  int object_index(std::string_view n) const;
  bool operator==(const HLProblem&) const = default;
};

Fact ground(const Fact& lifted, const std::vector<int32_t>& binding);
FactSet ground(const FactSet& lifted, const std::vector<int32_t>& binding);

void check_action(const Domain& d, const GroundAction& a, size_t n_objects);
bool applicable(const Domain& d, const HLState& s, const GroundAction& a);
std::vector<HLState> successors(const Domain& d, const HLState& s,
                                const GroundAction& a);
void apply_outcome(const Domain& d, HLState& s, const GroundAction& a,
                   size_t outcome);
bool is_goal(const HLState& s, const FactSet& goal);
bool subset(const FactSet& a, const HLState& s);

// Object renaming; `f[i]` is the image of object i.
void check_bijection(const std::vector<int32_t>& f);
std::vector<int32_t> inverse(const std::vector<int32_t>& f);
Fact rename(const Fact& x, const std::vector<int32_t>& f);
FactSet rename(const FactSet& s, const std::vector<int32_t>& f);
HLState rename(const HLState& s, const std::vector<int32_t>& f);
GroundAction rename(const GroundAction& a, const std::vector<int32_t>& f);
HLProblem rename(const HLProblem& p, const std::vector<int32_t>& f);

std::optional<std::vector<int32_t>> equivalent(const HLProblem& p1,
                                               const HLProblem& p2);

std::string fact_str(const Domain& d, const std::vector<std::string>& objects,
                     const Fact& f);
std::string action_str(const Domain& d,
                       const std::vector<std::string>& objects,
                       const GroundAction& a);

// Every ground action over the object range in canonical (schema, args) order.
std::vector<GroundAction> all_ground_actions(const Domain& d,
                                             size_t n_objects);

}  // namespace bison
