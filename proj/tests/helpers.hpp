#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bison/core.hpp"
#include "bison/envs.hpp"
#include "bison/policy.hpp"

namespace testutil {

using namespace bison;

inline uint64_t pick(std::mt19937_64& rng, uint64_t n) { return uniform_index(rng, n); }
inline bool coin(std::mt19937_64& rng, double p = 0.5) { return uniform01(rng) < p; }

inline Fact random_atom(std::mt19937_64& rng, const Domain& d, int32_t n_terms) {
  // n_terms == 0 restricts to nullary predicates
  std::vector<int32_t> ok;
  for (size_t i = 0; i < d.predicates.size(); ++i)
    if (n_terms > 0 || d.predicates[i].arity == 0) ok.push_back(static_cast<int32_t>(i));
  const int32_t p = ok[pick(rng, ok.size())];
  std::vector<int32_t> args;
  for (int i = 0; i < d.predicates[p].arity; ++i)
    args.push_back(static_cast<int32_t>(pick(rng, n_terms)));
  return Fact(p, args);
}

inline FactSet random_atoms(std::mt19937_64& rng, const Domain& d, int32_t n_terms,
                            size_t max_count) {
  FactSet out;
  const size_t k = pick(rng, max_count + 1);
  for (size_t i = 0; i < k; ++i) out.push_back(random_atom(rng, d, n_terms));
  return normalize(std::move(out));
}

// 2-4 predicates of arity 0..2 (always one nullary), 1-3 schemata with
// 0..3 vars and 1..2 outcomes.
inline Domain random_domain(std::mt19937_64& rng) {
  Domain d;
  d.name = "rand";
  const size_t np = 2 + pick(rng, 3);
  for (size_t i = 0; i < np; ++i)
    d.predicates.push_back({"p" + std::to_string(i), i == 0 ? 0 : static_cast<int>(pick(rng, 3))});
  const size_t ns = 1 + pick(rng, 3);
  for (size_t s = 0; s < ns; ++s) {
    ActionSchema a;
    a.name = "a" + std::to_string(s);
    const size_t nv = pick(rng, 4);
    for (size_t v = 0; v < nv; ++v) a.vars.push_back("?v" + std::to_string(v));
    const auto terms = static_cast<int32_t>(nv);
    a.pre = random_atoms(rng, d, terms, 3);
    const size_t no = 1 + pick(rng, 2);
    for (size_t o = 0; o < no; ++o) {
      Outcome oc;
      oc.add = random_atoms(rng, d, terms, 3);
      FactSet del = random_atoms(rng, d, terms, 3);
      for (const auto& f : del)
        if (!std::binary_search(oc.add.begin(), oc.add.end(), f)) oc.del.push_back(f);
      a.outcomes.push_back(std::move(oc));
    }
    d.schemata.push_back(std::move(a));
  }
  d.validate();
  return d;
}

inline HLState random_state(std::mt19937_64& rng, const Domain& d, int32_t n_objects,
                            size_t max_facts) {
  return to_state(random_atoms(rng, d, n_objects, max_facts));
}

inline GroundAction random_action(std::mt19937_64& rng, const Domain& d, int32_t n_objects) {
  GroundAction a;
  a.schema = static_cast<int32_t>(pick(rng, d.schemata.size()));
  for (size_t i = 0; i < d.schemata[a.schema].vars.size(); ++i)
    a.args.push_back(static_cast<int32_t>(pick(rng, n_objects)));
  return a;
}

inline std::vector<int32_t> random_bijection(std::mt19937_64& rng, size_t n) {
  std::vector<int32_t> f(n);
  for (size_t i = 0; i < n; ++i) f[i] = static_cast<int32_t>(i);
  for (size_t i = n; i > 1; --i) std::swap(f[i - 1], f[pick(rng, i)]);
  return f;
}

inline Rule random_rule(std::mt19937_64& rng, const Domain& d) {
  Rule r;
  r.schema = static_cast<int32_t>(pick(rng, d.schemata.size()));
  const auto arity = static_cast<int32_t>(d.schemata[r.schema].vars.size());
  r.n_vars = arity + static_cast<int32_t>(pick(rng, 2));
  if (r.n_vars == 0) r.n_vars = 1;
  for (int32_t i = 0; i < arity; ++i) r.head.push_back(static_cast<int32_t>(pick(rng, r.n_vars)));
  r.scond = random_atoms(rng, d, r.n_vars, 3);
  r.gcond = random_atoms(rng, d, r.n_vars, 2);
  r.val = static_cast<int>(pick(rng, 3));
  return r;
}

// Every binding in O^n_vars satisfying sCond ⊆ s and gCond ⊆ g \ s.
inline std::set<std::vector<int32_t>> brute_matches(const Rule& r, const HLState& s,
                                                    const FactSet& goal, size_t n_objects) {
  std::set<std::vector<int32_t>> out;
  HLState open;
  for (const auto& f : goal)
    if (!s.count(f)) open.insert(f);
  std::vector<int32_t> b(r.n_vars, 0);
  std::function<void(size_t)> rec = [&](size_t v) {
    if (v == b.size()) {
      for (const auto& f : r.scond)
        if (!s.count(ground(f, b))) return;
      for (const auto& f : r.gcond)
        if (!open.count(ground(f, b))) return;
      out.insert(b);
      return;
    }
    for (size_t o = 0; o < n_objects; ++o) {
      b[v] = static_cast<int32_t>(o);
      rec(v + 1);
    }
  };
  rec(0);
  return out;
}

inline std::vector<std::string> object_names(size_t n) {
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) out.push_back("o" + std::to_string(i));
  return out;
}

// Oracle pick-place demos: first with the robot starting at the block, second
// with it starting at the location that is neither the block's nor the goal's.
inline std::pair<Demo, Demo> pick_place_demos() {
  EnvConfig c;
  c.kind = EnvKind::pick_place;
  c.n_objects = 1;
  c.seed = 1;
  auto demos = generate_demos(c, 64);
  std::optional<Demo> at_block, third;
  for (const auto& dm : demos) {
    const auto& s = dm.steps.front().state;
    auto at_ego = [&](size_t i) {
      return std::abs(s.objects[i][feat::kX]) < 1e-9 && std::abs(s.objects[i][feat::kY]) < 1e-9;
    };
    size_t goal_loc = 0;
    for (size_t i = 0; i < s.names.size(); ++i)
      if (s.names[i] == dm.goal.at(0).args.at(1)) goal_loc = i;
    if (at_ego(0)) {
      if (!at_block) at_block = dm;
    } else if (!at_ego(goal_loc) && !third) {
      third = dm;
    }
  }
  if (!at_block || !third) throw std::runtime_error("pick_place_demos: no suitable seeds");
  return {*at_block, *third};
}

// Expected pick-place policy, hand-written with readable variable names.
inline const char* kPickPlacePolicy =
    "1: (:vars ?x ?l) (:state (hold ?x) (rAt ?l)) (:goal (at ?x ?l)) => (place ?x ?l)\n"
    "2: (:vars ?x ?l ?l1) (:state (hold ?x) (rAt ?l1)) (:goal (at ?x ?l)) => (move ?l1 ?l)\n"
    "3: (:vars ?x ?l ?l1) (:state (at ?x ?l1) (free) (rAt ?l1)) (:goal (at ?x ?l)) => (pick ?x ?l1)\n"
    "4: (:vars ?x ?l ?l1 ?l2) (:state (at ?x ?l1) (free) (rAt ?l2)) (:goal (at ?x ?l)) => (move ?l2 ?l1)\n";

inline std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  size_t a = 0;
  while (a < s.size()) {
    size_t b = s.find('\n', a);
    out.push_back(s.substr(a, b - a));
    a = b + 1;
  }
  return out;
}

}  // namespace testutil
