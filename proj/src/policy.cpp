#include "bison/policy.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "bison/log.hpp"

namespace bison {

namespace {

uint64_t hmix(uint64_t a, uint64_t b) {
  uint64_t h = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  h ^= h >> 31;
  h *= 0x7fb5d329728ea185ULL;
  h ^= h >> 27;
  return h;
}

struct TaggedAtom {
  int section;  // 0 = state, 1 = goal
  Fact atom;
};

// Weisfeiler-Lehman style colours for variables, used only to break ties
// between structurally different variables during canonical naming.
std::vector<uint64_t> var_colours(const Rule& r,
                                  const std::vector<TaggedAtom>& atoms) {
  std::vector<uint64_t> c(r.n_vars, 0x51ed2701ULL);
  for (size_t i = 0; i < r.head.size(); ++i)
    c[r.head[i]] = hmix(c[r.head[i]], 1000 + i);
  for (int round = 0; round < 3; ++round) {
    std::vector<std::vector<uint64_t>> occ(r.n_vars);
    for (const auto& ta : atoms) {
      for (int p = 0; p < ta.atom.arity; ++p) {
        uint64_t h = hmix(hmix(ta.section, ta.atom.pred), p);
        for (int q = 0; q < ta.atom.arity; ++q)
          if (q != p) h = hmix(h, hmix(q, c[ta.atom.args[q]]));
        occ[ta.atom.args[p]].push_back(h);
      }
    }
    std::vector<uint64_t> next(r.n_vars);
    for (int v = 0; v < r.n_vars; ++v) {
      std::sort(occ[v].begin(), occ[v].end());
      uint64_t h = c[v];
      for (auto x : occ[v]) h = hmix(h, x);
      next[v] = h;
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace

Rule canonicalize(const Rule& r) {
  std::vector<TaggedAtom> atoms;
  for (const auto& f : r.scond) atoms.push_back({0, f});
  for (const auto& f : r.gcond) atoms.push_back({1, f});
  const auto colour = var_colours(r, atoms);

  std::vector<int32_t> name(r.n_vars, -1);
  int32_t next = 0;
  auto assign = [&](int32_t v) {
    if (name[v] < 0) name[v] = next++;
  };
  for (auto v : r.head) assign(v);

  using ArgKey = std::pair<int, uint64_t>;
  std::vector<char> done(atoms.size(), 0);
  for (size_t step = 0; step < atoms.size(); ++step) {
    size_t best = atoms.size();
    std::tuple<int, int32_t, std::vector<ArgKey>> best_key;
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (done[i]) continue;
      std::vector<ArgKey> args;
      for (int p = 0; p < atoms[i].atom.arity; ++p) {
        auto v = atoms[i].atom.args[p];
        args.push_back(name[v] >= 0 ? ArgKey{0, static_cast<uint64_t>(name[v])}
                                    : ArgKey{1, colour[v]});
      }
      auto key = std::make_tuple(atoms[i].section, atoms[i].atom.pred, args);
      if (best == atoms.size() || key < best_key) {
        best = i;
        best_key = std::move(key);
      }
    }
    done[best] = 1;
    for (int p = 0; p < atoms[best].atom.arity; ++p)
      assign(atoms[best].atom.args[p]);
  }
  for (int32_t v = 0; v < r.n_vars; ++v) assign(v);

  Rule out;
  out.val = r.val;
  out.n_vars = r.n_vars;
  out.schema = r.schema;
  for (auto v : r.head) out.head.push_back(name[v]);
  auto remap = [&](const FactSet& s) {
    FactSet o;
    for (const auto& f : s) {
      Fact g = f;
      for (int p = 0; p < f.arity; ++p) g.args[p] = name[f.args[p]];
      o.push_back(g);
    }
    return normalize(std::move(o));
  };
  out.scond = remap(r.scond);
  out.gcond = remap(r.gcond);
  return out;
}

static std::string atom_text(const Domain& d, const Fact& f) {
  std::string s = "(" + d.predicates.at(f.pred).name;
  for (int i = 0; i < f.arity; ++i) s += " ?v" + std::to_string(f.args[i]);
  return s + ")";
}

std::string rule_body(const Domain& d, const Rule& r) {
  std::string s = "(:vars";
  for (int32_t v = 0; v < r.n_vars; ++v) s += " ?v" + std::to_string(v);
  s += ") (:state";
  for (const auto& f : r.scond) s += " " + atom_text(d, f);
  s += ") (:goal";
  for (const auto& f : r.gcond) s += " " + atom_text(d, f);
  s += ") => (" + d.schemata.at(r.schema).name;
  for (auto v : r.head) s += " ?v" + std::to_string(v);
  return s + ")";
}

std::string rule_str(const Domain& d, const Rule& r) {
  return std::to_string(r.val + 1) + ": " + rule_body(d, r);
}

void validate_rule(const Domain& d, const Rule& r) {
  if (r.schema < 0 || r.schema >= static_cast<int>(d.schemata.size()))
    throw StructuralError("rule head uses an unknown schema");
  if (r.head.size() != d.schemata[r.schema].vars.size())
    throw StructuralError("rule head arity mismatch for " +
                          d.schemata[r.schema].name);
  auto check = [&](const Fact& f) {
    if (f.pred < 0 || f.pred >= static_cast<int>(d.predicates.size()))
      throw StructuralError("rule uses an undeclared predicate");
    if (d.predicates[f.pred].arity != f.arity)
      throw StructuralError("rule atom arity mismatch for " +
                            d.predicates[f.pred].name);
    for (int i = 0; i < f.arity; ++i)
      if (f.args[i] < 0 || f.args[i] >= r.n_vars)
        throw StructuralError("rule atom uses an undeclared variable");
  };
  for (const auto& f : r.scond) check(f);
  for (const auto& f : r.gcond) check(f);
  for (auto v : r.head)
    if (v < 0 || v >= r.n_vars)
      throw StructuralError("rule head uses an undeclared variable");
}

bool has_unconstrained_vars(const Rule& r) {
  std::vector<char> seen(r.n_vars, 0);
  for (const auto* s : {&r.scond, &r.gcond})
    for (const auto& f : *s)
      for (int i = 0; i < f.arity; ++i) seen[f.args[i]] = 1;
  return std::find(seen.begin(), seen.end(), 0) != seen.end();
}

HLPolicy make_policy(const Domain& d, std::vector<Rule> rules) {
  std::map<std::string, Rule> by_body;
  for (auto& r : rules) {
    validate_rule(d, r);
    Rule c = canonicalize(r);
    auto body = rule_body(d, c);
    auto it = by_body.find(body);
    if (it == by_body.end())
      by_body.emplace(std::move(body), std::move(c));
    else
      it->second.val = std::min(it->second.val, c.val);
  }
  std::vector<std::pair<std::string, Rule>> v(by_body.begin(), by_body.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.val, a.first) < std::tie(b.second.val, b.first);
  });
  HLPolicy p;
  for (auto& [body, r] : v) {
    if (has_unconstrained_vars(r))
      log::debug("rule grounds unconstrained variables over all objects: {}",
                 body);
    p.rules.push_back(std::move(r));
  }
  return p;
}

void FactIndex::reset(size_t n_predicates) {
  all_.clear();
  by_pred_.assign(n_predicates, {});
  by_arg_.clear();
}

uint64_t FactIndex::key(int32_t p, int pos, int32_t obj) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(p)) << 40) ^
         (static_cast<uint64_t>(pos) << 32) ^
         static_cast<uint64_t>(static_cast<uint32_t>(obj));
}

void FactIndex::insert(const Fact& f) {
  if (!all_.insert(f).second) return;
  by_pred_.at(f.pred).insert(f);
  for (int i = 0; i < f.arity; ++i) by_arg_[key(f.pred, i, f.args[i])].insert(f);
}

void FactIndex::erase(const Fact& f) {
  if (!all_.erase(f)) return;
  by_pred_.at(f.pred).erase(f);
  for (int i = 0; i < f.arity; ++i) {
    auto it = by_arg_.find(key(f.pred, i, f.args[i]));
    if (it == by_arg_.end()) continue;
    it->second.erase(f);
    if (it->second.empty()) by_arg_.erase(it);
  }
}

const std::set<Fact>* FactIndex::with_arg(int32_t p, int pos,
                                          int32_t obj) const {
  auto it = by_arg_.find(key(p, pos, obj));
  return it == by_arg_.end() ? nullptr : &it->second;
}

MatchContext::MatchContext(const Domain& d, size_t n_objects, const HLState& s,
                           const FactSet& goal)
    : state_(d.predicates.size()),
      open_(d.predicates.size()),
      goal_(goal.begin(), goal.end()),
      n_objects_(n_objects) {
  for (const auto& f : s) state_.insert(f);
  for (const auto& f : goal_)
    if (!state_.contains(f)) open_.insert(f);
}

void MatchContext::add(const Fact& f) {
  state_.insert(f);
  if (goal_.count(f)) open_.erase(f);
}

void MatchContext::remove(const Fact& f) {
  state_.erase(f);
  if (goal_.count(f)) open_.insert(f);
}

void MatchContext::apply(const Domain& d, const GroundAction& a,
                         size_t outcome) {
  const auto& o = d.schemata.at(a.schema).outcomes.at(outcome);
  for (const auto& f : o.del) remove(ground(f, a.args));
  for (const auto& f : o.add) add(ground(f, a.args));
}

namespace {

struct Join {
  const Rule& rule;
  const MatchContext& ctx;
  // Called on every total binding; returning true stops the search.
  const std::function<bool(const std::vector<int32_t>&)>* visit = nullptr;
  std::vector<const Fact*> atoms;
  std::vector<char> is_goal;
  std::vector<char> done;
  std::vector<int32_t> binding;

  Join(const Rule& r, const MatchContext& c) : rule(r), ctx(c) {
    for (const auto& f : r.scond) {
      atoms.push_back(&f);
      is_goal.push_back(0);
    }
    for (const auto& f : r.gcond) {
      atoms.push_back(&f);
      is_goal.push_back(1);
    }
    done.assign(atoms.size(), 0);
    binding.assign(r.n_vars, -1);
  }

  const FactIndex& index(size_t i) const {
    return is_goal[i] ? ctx.open_goals() : ctx.state();
  }

  // Candidate facts for atom i under the current binding.
  const std::set<Fact>* candidates(size_t i) const {
    const Fact& a = *atoms[i];
    const std::set<Fact>* best = &index(i).with_pred(a.pred);
    for (int p = 0; p < a.arity; ++p) {
      auto v = binding[a.args[p]];
      if (v < 0) continue;
      const auto* s = index(i).with_arg(a.pred, p, v);
      if (!s) return nullptr;
      if (s->size() < best->size()) best = s;
    }
    return best;
  }

  bool run() {
    size_t pick = atoms.size();
    std::tuple<int, int, size_t> pick_key{};
    const std::set<Fact>* pick_cands = nullptr;
    for (size_t i = 0; i < atoms.size(); ++i) {
      if (done[i]) continue;
      const Fact& a = *atoms[i];
      int bound = 0;
      for (int p = 0; p < a.arity; ++p) bound += binding[a.args[p]] >= 0;
      const bool ground = bound == a.arity;
      const auto* cands = candidates(i);
      const size_t est = cands ? cands->size() : 0;
      if (est == 0) return false;
      auto key = std::make_tuple(ground ? 0 : 1, -bound, est);
      if (pick == atoms.size() || key < pick_key) {
        pick = i;
        pick_key = key;
        pick_cands = cands;
      }
    }
    if (pick == atoms.size()) return finish(0);

    const Fact& a = *atoms[pick];
    done[pick] = 1;
    if (std::get<0>(pick_key) == 0) {
      Fact g = ground(a, binding);
      if (index(pick).contains(g) && run()) return true;
      done[pick] = 0;
      return false;
    }
    std::vector<int32_t> newly;
    for (const auto& f : *pick_cands) {
      bool ok = true;
      newly.clear();
      for (int p = 0; p < a.arity && ok; ++p) {
        auto v = a.args[p];
        if (binding[v] < 0) {
          binding[v] = f.args[p];
          newly.push_back(v);
        } else if (binding[v] != f.args[p]) {
          ok = false;
        }
      }
      if (ok && run()) return true;
      for (auto v : newly) binding[v] = -1;
    }
    done[pick] = 0;
    return false;
  }

  // Variables outside every condition atom range over all objects in
  // canonical order.
  bool finish(size_t from) {
    size_t v = from;
    while (v < binding.size() && binding[v] >= 0) ++v;
    if (v == binding.size()) return visit ? (*visit)(binding) : true;
    for (size_t o = 0; o < ctx.n_objects(); ++o) {
      binding[v] = static_cast<int32_t>(o);
      if (finish(v + 1)) return true;
    }
    binding[v] = -1;
    return false;
  }
};

}  // namespace

std::optional<std::vector<int32_t>> match_rule(const Rule& r,
                                               const MatchContext& ctx) {
  Join j(r, ctx);
  if (!j.run()) return std::nullopt;
  return j.binding;
}

void for_each_match(
    const Rule& r, const MatchContext& ctx,
    const std::function<bool(const std::vector<int32_t>&)>& visit) {
  Join j(r, ctx);
  j.visit = &visit;
  j.run();
}

std::vector<GroundAction> applicable_actions(const Domain& d, const HLState& s,
                                             size_t n_objects) {
  MatchContext ctx(d, n_objects, s, {});
  std::vector<GroundAction> out;
  for (size_t i = 0; i < d.schemata.size(); ++i) {
    Rule r;
    r.schema = static_cast<int32_t>(i);
    r.n_vars = static_cast<int32_t>(d.schemata[i].vars.size());
    r.scond = d.schemata[i].pre;
    for (int32_t v = 0; v < r.n_vars; ++v) r.head.push_back(v);
    for_each_match(r, ctx, [&](const std::vector<int32_t>& b) {
      out.push_back({r.schema, b});
      return false;
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::vector<int32_t>> match_rule(const Domain& d, const Rule& r,
                                               const HLState& s,
                                               const FactSet& goal,
                                               size_t n_objects) {
  MatchContext ctx(d, n_objects, s, goal);
  return match_rule(r, ctx);
}

std::optional<Selection> select_action(const Domain& d, const HLPolicy& p,
                                       const MatchContext& ctx) {
  for (size_t i = 0; i < p.rules.size(); ++i) {
    const auto& r = p.rules[i];
    auto b = match_rule(r, ctx);
    if (!b) continue;
    Selection sel;
    sel.rule_index = i;
    sel.binding = *b;
    sel.action.schema = r.schema;
    for (auto v : r.head) sel.action.args.push_back((*b)[v]);
    for (const auto& f : d.schemata[r.schema].pre)
      if (!ctx.state().contains(ground(f, sel.action.args))) {
        sel.applicable = false;
        log::debug("policy selected an inapplicable action: {}",
                   d.schemata[r.schema].name);
        break;
      }
    return sel;
  }
  return std::nullopt;
}

std::optional<GroundAction> select_action(const Domain& d, const HLPolicy& p,
                                          const HLState& s,
                                          const FactSet& goal,
                                          size_t n_objects) {
  MatchContext ctx(d, n_objects, s, goal);
  auto sel = select_action(d, p, ctx);
  if (!sel) return std::nullopt;
  return sel->action;
}

OutcomeChooser fixed_outcome(size_t index) {
  return [index](const GroundAction&, size_t n) {
    return std::min(index, n - 1);
  };
}

OutcomeChooser random_outcome(uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const GroundAction&, size_t n) {
    return static_cast<size_t>((*rng)() % n);
  };
}

OutcomeChooser adversarial_outcome() {
  return [](const GroundAction&, size_t n) { return n - 1; };
}

SolveResult solve_hl(const Domain& d, const HLPolicy& p, const HLProblem& prob,
                     const OutcomeChooser& choose, size_t step_cap) {
  if (step_cap == 0) throw PreconditionError("solve_hl: step_cap must be > 0");
  SolveResult res;
  MatchContext ctx(d, prob.objects.size(), prob.init, prob.goal);
  for (size_t step = 0;; ++step) {
    if (ctx.open_goals().size() == 0) {
      res.status = SolveStatus::solved;
      return res;
    }
    if (step == step_cap) {
      res.status = SolveStatus::step_cap;
      return res;
    }
    auto sel = select_action(d, p, ctx);
    if (!sel) {
      res.status = SolveStatus::no_action;
      return res;
    }
    if (!sel->applicable) {
      // An inapplicable selection cannot change the state; stop rather than
      // spin until the cap.
      ++res.policy_defects;
      res.status = SolveStatus::no_action;
      return res;
    }
    const size_t n_out = d.schemata[sel->action.schema].outcomes.size();
    const size_t o = choose(sel->action, n_out);
    ctx.apply(d, sel->action, o);
    res.rule_vals.push_back(p.rules[sel->rule_index].val);
    res.actions.push_back(std::move(sel->action));
  }
}

}  // namespace bison
