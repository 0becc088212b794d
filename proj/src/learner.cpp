#include "bison/learner.hpp"

#include <algorithm>
#include <limits>

#include "bison/io.hpp"
#include "bison/log.hpp"

namespace bison {

AbstractionGap::AbstractionGap(size_t s, const std::string& msg)
    : std::runtime_error(msg), step(s) {}

namespace {

std::vector<char> mentioned(const HLState& s, size_t n_objects) {
  std::vector<char> m(n_objects, 0);
  for (const auto& f : s)
    for (int i = 0; i < f.arity; ++i) m[f.args[i]] = 1;
  return m;
}

}  // namespace

bool explains(const Domain& d, const HLState& cur, const HLState& next,
              const GroundAction& a, size_t outcome) {
  const auto& o = d.schemata[a.schema].outcomes[outcome];
  // Cheap rejection: every added atom must be present afterwards.
  for (const auto& f : o.add)
    if (!next.count(ground(f, a.args))) return false;
  HLState s = cur;
  apply_outcome(d, s, a, outcome);
  if (s.size() > next.size()) return false;
  for (const auto& f : s)
    if (!next.count(f)) return false;
  if (s.size() == next.size()) return true;
  int32_t max_obj = 0;
  for (const auto& f : next)
    for (int i = 0; i < f.arity; ++i) max_obj = std::max(max_obj, f.args[i]);
  for (const auto& f : cur)
    for (int i = 0; i < f.arity; ++i) max_obj = std::max(max_obj, f.args[i]);
  const auto known = mentioned(cur, static_cast<size_t>(max_obj) + 1);
  for (const auto& f : next) {
    if (s.count(f)) continue;
    bool fresh = false;
    for (int i = 0; i < f.arity; ++i) fresh = fresh || !known[f.args[i]];
    if (!fresh) return false;
  }
  return true;
}

HLTrace extract_hl_trace(const Demo& demo, const Domain& d,
                         const Labelling& label) {
  if (demo.steps.empty()) throw PreconditionError("extract_hl_trace: empty demo");
  const auto& names = demo.steps[0].state.names;
  HLTrace t;
  t.goal = resolve(d, names, demo.goal);
  t.states.push_back(label(demo.steps[0].state));
  for (size_t j = 1; j < demo.steps.size(); ++j) {
    HLState next = label(demo.steps[j].state);
    const HLState& cur = t.states.back();
    if (next == cur) continue;
    bool found = false;
    for (const auto& a : applicable_actions(d, cur, names.size())) {
      const size_t n_out = d.schemata[a.schema].outcomes.size();
      for (size_t o = 0; o < n_out && !found; ++o) {
        if (explains(d, cur, next, a, o)) {
          t.actions.push_back(a);
          t.outcomes.push_back(o);
          found = true;
        }
      }
      if (found) break;
    }
    if (!found)
      throw AbstractionGap(j, "no HL action explains the abstraction change at step " +
                                  std::to_string(j));
    t.states.push_back(std::move(next));
    t.change_steps.push_back(j);
  }
  t.goal_reached = is_goal(t.states.back(), t.goal);
  return t;
}

std::vector<FactSet> regress(const Domain& d, const FactSet& goal,
                             const GroundAction& a) {
  const auto& s = d.schemata.at(a.schema);
  for (const auto& o : s.outcomes)
    for (const auto& f : o.del)
      if (std::binary_search(goal.begin(), goal.end(), ground(f, a.args)))
        return {};
  const FactSet pre = ground(s.pre, a.args);
  std::vector<FactSet> out;
  for (const auto& o : s.outcomes) {
    const FactSet add = ground(o.add, a.args);
    FactSet r;
    std::set_difference(goal.begin(), goal.end(), add.begin(), add.end(),
                        std::back_inserter(r));
    r.insert(r.end(), pre.begin(), pre.end());
    out.push_back(normalize(std::move(r)));
  }
  return out;
}

Rule lift(const GroundAction& a, const FactSet& state_cond,
          const FactSet& goal_cond) {
  std::vector<std::pair<int32_t, int32_t>> var_of;  // object -> variable
  auto var = [&](int32_t obj) {
    for (const auto& [o, v] : var_of)
      if (o == obj) return v;
    int32_t v = static_cast<int32_t>(var_of.size());
    var_of.push_back({obj, v});
    return v;
  };
  Rule r;
  r.schema = a.schema;
  for (auto o : a.args) r.head.push_back(var(o));
  auto lift_set = [&](const FactSet& s) {
    FactSet out;
    for (const auto& f : s) {
      Fact g = f;
      for (int i = 0; i < f.arity; ++i) g.args[i] = var(f.args[i]);
      out.push_back(g);
    }
    return normalize(std::move(out));
  };
  r.scond = lift_set(state_cond);
  r.gcond = lift_set(goal_cond);
  r.n_vars = static_cast<int32_t>(var_of.size());
  return r;
}

HLPolicy learn_from_traces(const std::vector<HLTrace>& traces, const Domain& d,
                           const LearnConfig& cfg, LearnStats* stats) {
  LearnStats local;
  LearnStats& st = stats ? *stats : local;
  std::vector<Rule> rules;
  for (const auto& t : traces) {
    if (t.actions.empty()) continue;
    const HLState& final_state = t.states.back();
    FactSet reached;
    for (const auto& f : t.goal)
      if (final_state.count(f)) reached.push_back(f);
    if (!t.goal_reached) ++st.unreached_goal_demos;
    if (reached.empty()) continue;

    const size_t m = t.actions.size() - 1;
    size_t n_objects = 0;
    auto grow = [&](const Fact& f) {
      for (int i = 0; i < f.arity; ++i)
        n_objects = std::max(n_objects, static_cast<size_t>(f.args[i]) + 1);
    };
    for (const auto& hs : t.states)
      for (const auto& f : hs) grow(f);
    for (const auto& f : t.goal) grow(f);
    for (const auto& a : t.actions)
      for (auto o : a.args) n_objects = std::max(n_objects, static_cast<size_t>(o) + 1);
    std::vector<FactSet> S{reached};
    for (size_t jj = 0; jj <= m; ++jj) {
      const size_t j = m - jj;
      const GroundAction& a = t.actions[j];
      // Replaying the observed outcomes from s_j reproduces the recorded
      // suffix, so the goal atoms it achieves are those true at the end but
      // not yet true at s_j.
      FactSet achieved;
      for (const auto& f : reached)
        if (!t.states[j].count(f)) achieved.push_back(f);

      std::vector<char> known(n_objects, 0);
      for (const auto& f : t.states[j])
        for (int i = 0; i < f.arity; ++i) known[f.args[i]] = 1;
      for (const auto& f : t.goal)
        for (int i = 0; i < f.arity; ++i) known[f.args[i]] = 1;

      std::vector<FactSet> next;
      for (const auto& G : S) {
        auto R = regress(d, G, a);
        if (R.empty()) {
          next.push_back(G);
          continue;
        }
        for (auto& Ri : R) {
          // Facts about objects not yet observed at s_j cannot be conditions.
          std::erase_if(Ri, [&](const Fact& f) {
            for (int i = 0; i < f.arity; ++i)
              if (!known[f.args[i]]) return true;
            return false;
          });
          if (!achieved.empty()) {
            // Goal atoms already holding at s_j are independent of the ones
            // this suffix achieves; keeping them would tie the rule to the
            // number of blocks already done.
            FactSet cond;
            for (const auto& f : Ri)
              if (!(std::binary_search(t.goal.begin(), t.goal.end(), f) &&
                    t.states[j].count(f)))
                cond.push_back(f);
            Rule r = lift(a, cond, achieved);
            r.val = static_cast<int>(m - j);
            rules.push_back(std::move(r));
            ++st.rules_emitted;
          }
          next.push_back(std::move(Ri));
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      if (next.size() > cfg.max_subgoals) {
        st.subgoals_dropped += next.size() - cfg.max_subgoals;
        log::warn("subgoal set capped at {} (dropped {})", cfg.max_subgoals,
                  next.size() - cfg.max_subgoals);
        next.resize(cfg.max_subgoals);
      }
      S = std::move(next);
    }
  }
  return make_policy(d, std::move(rules));
}

HLPolicy learn_hl_policy(const std::vector<Demo>& demos, const Domain& d,
                         const Labelling& label, const LearnConfig& cfg,
                         LearnStats* stats) {
  LearnStats local;
  LearnStats& st = stats ? *stats : local;
  std::vector<HLTrace> traces;
  for (size_t i = 0; i < demos.size(); ++i) {
    try {
      traces.push_back(extract_hl_trace(demos[i], d, label));
      ++st.demos_used;
    } catch (const AbstractionGap& e) {
      ++st.demos_skipped;
      log::warn("skipping demo {}: {}", i, e.what());
    }
  }
  if (st.demos_skipped) log::warn("{} demo(s) skipped", st.demos_skipped);
  return learn_from_traces(traces, d, cfg, &st);
}

namespace {

struct Sat {
  uint64_t v;
  bool sat;
};

Sat smul(Sat a, Sat b) {
  if (a.v == 0 || b.v == 0) return {0, a.sat || b.sat};
  if (a.v > std::numeric_limits<uint64_t>::max() / b.v)
    return {std::numeric_limits<uint64_t>::max(), true};
  return {a.v * b.v, a.sat || b.sat};
}

Sat sadd(Sat a, Sat b) {
  if (a.v > std::numeric_limits<uint64_t>::max() - b.v)
    return {std::numeric_limits<uint64_t>::max(), true};
  return {a.v + b.v, a.sat || b.sat};
}

Sat spow(Sat base, uint64_t e) {
  Sat r{1, base.sat};
  for (uint64_t i = 0; i < e; ++i) {
    r = smul(r, base);
    if (r.sat && r.v == std::numeric_limits<uint64_t>::max()) break;
  }
  return r;
}

}  // namespace

CoverageBound coverage_bound(uint64_t P, uint64_t M, uint64_t A, uint64_t N,
                             uint64_t C) {
  Sat mm = M == 0 ? Sat{1, false} : spow({M, false}, M);
  Sat sum{0, false};
  for (uint64_t k = 0; k <= C; ++k) {
    Sat inner = smul({A, false}, spow(sadd(smul({k, false}, {N, false}), {M, false}), N));
    sum = sadd(sum, spow(inner, k));
    if (sum.sat && sum.v == std::numeric_limits<uint64_t>::max()) break;
  }
  Sat r = smul(smul({P, false}, mm), sum);
  return {r.v, r.sat};
}

CoverageBound coverage_bound(const Domain& d, uint64_t C) {
  return coverage_bound(d.predicates.size(), d.max_predicate_arity(),
                        d.schemata.size(), d.max_schema_arity(), C);
}

}  // namespace bison
