#include "bison/core.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace bison {

Fact::Fact(int32_t p, std::initializer_list<int32_t> a) : pred(p) {
  if (a.size() > static_cast<size_t>(kMaxArity))
    throw StructuralError("fact arity exceeds limit");
  arity = static_cast<int32_t>(a.size());
  std::copy(a.begin(), a.end(), args.begin());
}

Fact::Fact(int32_t p, const std::vector<int32_t>& a) : pred(p) {
  if (a.size() > static_cast<size_t>(kMaxArity))
    throw StructuralError("fact arity exceeds limit");
  arity = static_cast<int32_t>(a.size());
  std::copy(a.begin(), a.end(), args.begin());
}

static inline uint64_t mix(uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

size_t FactHash::operator()(const Fact& f) const noexcept {
  uint64_t h = static_cast<uint64_t>(static_cast<uint32_t>(f.pred)) << 8 |
               static_cast<uint64_t>(f.arity);
  for (int i = 0; i < f.arity; ++i)
    h = mix(h ^ (static_cast<uint64_t>(static_cast<uint32_t>(f.args[i])) +
                 0x9e3779b97f4a7c15ULL * (i + 1)));
  return static_cast<size_t>(mix(h));
}

FactSet sorted(const HLState& s) {
  FactSet v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

FactSet normalize(FactSet v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

HLState to_state(const FactSet& v) { return HLState(v.begin(), v.end()); }

uint64_t state_hash(const HLState& s) {
  // Order-free: sum of mixed element hashes.
  uint64_t h = 0x1234567ULL + s.size();
  FactHash fh;
  for (const auto& f : s) h += mix(fh(f) + 0x632be59bd9b4e019ULL);
  return h;
}

int Domain::predicate_index(std::string_view n) const {
  for (size_t i = 0; i < predicates.size(); ++i)
    if (predicates[i].name == n) return static_cast<int>(i);
  return -1;
}

int Domain::schema_index(std::string_view n) const {
  for (size_t i = 0; i < schemata.size(); ++i)
    if (schemata[i].name == n) return static_cast<int>(i);
  return -1;
}

int Domain::max_predicate_arity() const {
  int m = 0;
  for (const auto& p : predicates) m = std::max(m, p.arity);
  return m;
}

int Domain::max_schema_arity() const {
  int m = 0;
  for (const auto& a : schemata)
    m = std::max(m, static_cast<int>(a.vars.size()));
  return m;
}

void Domain::validate() const {
  for (size_t i = 1; i < predicates.size(); ++i)
    if (!(predicates[i - 1].name < predicates[i].name))
      throw StructuralError("predicates must be unique and name-sorted");
  auto check_atoms = [&](const ActionSchema& a, const FactSet& atoms) {
    for (const auto& f : atoms) {
      if (f.pred < 0 || f.pred >= static_cast<int>(predicates.size()))
        throw StructuralError("schema " + a.name + ": undeclared predicate");
      if (predicates[f.pred].arity != f.arity)
        throw StructuralError("schema " + a.name + ": arity mismatch for " +
                              predicates[f.pred].name);
      for (int i = 0; i < f.arity; ++i)
        if (f.args[i] < 0 || f.args[i] >= static_cast<int>(a.vars.size()))
          throw StructuralError("schema " + a.name + ": unbound variable");
    }
  };
  for (const auto& a : schemata) {
    if (a.outcomes.empty())
      throw StructuralError("schema " + a.name + " has no outcomes");
    check_atoms(a, a.pre);
    for (const auto& o : a.outcomes) {
      check_atoms(a, o.add);
      check_atoms(a, o.del);
      for (const auto& f : o.add)
        if (std::binary_search(o.del.begin(), o.del.end(), f))
          throw StructuralError("schema " + a.name +
                                ": outcome adds and deletes the same atom");
    }
  }
}

int HLProblem::object_index(std::string_view n) const {
  for (size_t i = 0; i < objects.size(); ++i)
    if (objects[i] == n) return static_cast<int>(i);
  return -1;
}

Fact ground(const Fact& lifted, const std::vector<int32_t>& binding) {
  Fact g;
  g.pred = lifted.pred;
  g.arity = lifted.arity;
  for (int i = 0; i < lifted.arity; ++i) g.args[i] = binding[lifted.args[i]];
  return g;
}

FactSet ground(const FactSet& lifted, const std::vector<int32_t>& binding) {
  FactSet out;
  out.reserve(lifted.size());
  for (const auto& f : lifted) out.push_back(ground(f, binding));
  return normalize(std::move(out));
}

void check_action(const Domain& d, const GroundAction& a, size_t n_objects) {
  if (a.schema < 0 || a.schema >= static_cast<int>(d.schemata.size()))
    throw StructuralError("unknown action schema");
  const auto& s = d.schemata[a.schema];
  if (a.args.size() != s.vars.size())
    throw StructuralError("action " + s.name + ": binding arity mismatch");
  for (auto o : a.args)
    if (o < 0 || static_cast<size_t>(o) >= n_objects)
      throw StructuralError("action " + s.name + ": undeclared object");
}

bool subset(const FactSet& a, const HLState& s) {
  for (const auto& f : a)
    if (!s.count(f)) return false;
  return true;
}

bool applicable(const Domain& d, const HLState& s, const GroundAction& a) {
  const auto& sc = d.schemata.at(a.schema);
  if (a.args.size() != sc.vars.size())
    throw StructuralError("action " + sc.name + ": binding arity mismatch");
  for (const auto& f : sc.pre)
    if (!s.count(ground(f, a.args))) return false;
  return true;
}

void apply_outcome(const Domain& d, HLState& s, const GroundAction& a,
                   size_t outcome) {
  const auto& o = d.schemata.at(a.schema).outcomes.at(outcome);
  for (const auto& f : o.del) s.erase(ground(f, a.args));
  for (const auto& f : o.add) s.insert(ground(f, a.args));
}

std::vector<HLState> successors(const Domain& d, const HLState& s,
                                const GroundAction& a) {
  if (!applicable(d, s, a))
    throw PreconditionError("successors: action " +
                            d.schemata[a.schema].name + " is not applicable");
  std::vector<HLState> out;
  const auto n = d.schemata[a.schema].outcomes.size();
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    out.push_back(s);
    apply_outcome(d, out.back(), a, i);
  }
  return out;
}

bool is_goal(const HLState& s, const FactSet& goal) { return subset(goal, s); }

void check_bijection(const std::vector<int32_t>& f) {
  std::vector<char> seen(f.size(), 0);
  for (auto x : f) {
    if (x < 0 || static_cast<size_t>(x) >= f.size() || seen[x])
      throw StructuralError("renaming is not a bijection");
    seen[x] = 1;
  }
}

std::vector<int32_t> inverse(const std::vector<int32_t>& f) {
  check_bijection(f);
  std::vector<int32_t> inv(f.size());
  for (size_t i = 0; i < f.size(); ++i) inv[f[i]] = static_cast<int32_t>(i);
  return inv;
}

Fact rename(const Fact& x, const std::vector<int32_t>& f) {
  Fact y = x;
  for (int i = 0; i < x.arity; ++i) y.args[i] = f.at(x.args[i]);
  return y;
}

FactSet rename(const FactSet& s, const std::vector<int32_t>& f) {
  FactSet out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(rename(x, f));
  return normalize(std::move(out));
}

HLState rename(const HLState& s, const std::vector<int32_t>& f) {
  HLState out;
  out.reserve(s.size());
  for (const auto& x : s) out.insert(rename(x, f));
  return out;
}

GroundAction rename(const GroundAction& a, const std::vector<int32_t>& f) {
  GroundAction b = a;
  for (auto& o : b.args) o = f.at(o);
  return b;
}

HLProblem rename(const HLProblem& p, const std::vector<int32_t>& f) {
  if (f.size() != p.objects.size())
    throw StructuralError("renaming does not cover every object");
  check_bijection(f);
  HLProblem q;
  q.objects = p.objects;
  q.init = rename(p.init, f);
  q.goal = rename(p.goal, f);
  return q;
}

namespace {

using Signature = std::vector<std::array<int32_t, 3>>;

std::vector<Signature> signatures(const HLProblem& p) {
  std::vector<Signature> sig(p.objects.size());
  for (const auto& f : p.init)
    for (int i = 0; i < f.arity; ++i) sig[f.args[i]].push_back({0, f.pred, i});
  for (const auto& f : p.goal)
    for (int i = 0; i < f.arity; ++i) sig[f.args[i]].push_back({1, f.pred, i});
  for (auto& s : sig) std::sort(s.begin(), s.end());
  return sig;
}

struct Matcher {
  const HLProblem& p1;
  const HLProblem& p2;
  std::vector<Signature> s1, s2;
  // Facts of p1 (tagged init/goal) grouped by the object that completes
  // them in assignment order.
  std::vector<std::vector<std::pair<int, Fact>>> checks;
  HLState goal2;
  std::vector<int32_t> f, used;

  bool consistent(size_t obj) {
    for (const auto& [tag, fact] : checks[obj]) {
      Fact g = rename(fact, f);
      if (tag == 0 ? !p2.init.count(g) : !goal2.count(g)) return false;
    }
    return true;
  }

  bool search(size_t obj) {
    if (obj == f.size()) return true;
    for (size_t c = 0; c < f.size(); ++c) {
      if (used[c] || s1[obj] != s2[c]) continue;
      f[obj] = static_cast<int32_t>(c);
      used[c] = 1;
      if (consistent(obj) && search(obj + 1)) return true;
      used[c] = 0;
    }
    f[obj] = -1;
    return false;
  }
};

}  // namespace

std::optional<std::vector<int32_t>> equivalent(const HLProblem& p1,
                                               const HLProblem& p2) {
  const size_t n = p1.objects.size();
  if (n != p2.objects.size() || p1.init.size() != p2.init.size() ||
      p1.goal.size() != p2.goal.size())
    return std::nullopt;
  Matcher m{p1, p2, signatures(p1), signatures(p2), {}, {}, {}, {}};
  {
    auto a = m.s1, b = m.s2;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return std::nullopt;
  }
  m.checks.resize(n);
  auto place = [&](int tag, const Fact& x) {
    int last = 0;
    for (int i = 0; i < x.arity; ++i) last = std::max(last, x.args[i]);
    if (x.arity == 0) {
      // Nullary facts are checked before any assignment.
      return;
    }
    m.checks[last].push_back({tag, x});
  };
  for (const auto& x : p1.init) {
    if (x.arity == 0 && !p2.init.count(x)) return std::nullopt;
    place(0, x);
  }
  m.goal2 = to_state(p2.goal);
  for (const auto& x : p1.goal) {
    if (x.arity == 0 && !m.goal2.count(x)) return std::nullopt;
    place(1, x);
  }
  m.f.assign(n, -1);
  m.used.assign(n, 0);
  if (!m.search(0)) return std::nullopt;
  return m.f;
}

std::string fact_str(const Domain& d, const std::vector<std::string>& objects,
                     const Fact& f) {
  std::string s = "(" + d.predicates.at(f.pred).name;
  for (int i = 0; i < f.arity; ++i) {
    s += ' ';
    s += objects.at(f.args[i]);
  }
  return s + ")";
}

std::string action_str(const Domain& d,
                       const std::vector<std::string>& objects,
                       const GroundAction& a) {
  std::string s = "(" + d.schemata.at(a.schema).name;
  for (auto o : a.args) {
    s += ' ';
    s += objects.at(o);
  }
  return s + ")";
}

std::vector<GroundAction> all_ground_actions(const Domain& d,
                                             size_t n_objects) {
  std::vector<GroundAction> out;
  for (size_t si = 0; si < d.schemata.size(); ++si) {
    const size_t k = d.schemata[si].vars.size();
    if (k > 0 && n_objects == 0) continue;
    std::vector<int32_t> idx(k, 0);
    for (;;) {
      out.push_back({static_cast<int32_t>(si), idx});
      size_t pos = k;
      bool carry = true;
      while (carry && pos > 0) {
        --pos;
        if (static_cast<size_t>(++idx[pos]) < n_objects)
          carry = false;
        else
          idx[pos] = 0;
      }
      if (carry) break;
    }
  }
  return out;
}

}  // namespace bison
