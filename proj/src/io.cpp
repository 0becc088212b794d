#include "bison/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace bison {

ParseError::ParseError(int l, int c, const std::string& msg)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " +
                         msg),
      line(l),
      col(c) {}

namespace {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  int line = 1;
  int col = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line, col, msg);
  }
  bool is(std::string_view a) const { return !is_list && atom == a; }
  const std::string& expect_atom(const char* what) const {
    if (is_list) fail(std::string("expected ") + what);
    return atom;
  }
  const std::vector<SExpr>& expect_list(const char* what) const {
    if (!is_list) fail(std::string("expected ") + what);
    return items;
  }
  bool head_is(std::string_view a) const {
    return is_list && !items.empty() && items[0].is(a);
  }
};

class SReader {
 public:
  explicit SReader(std::string_view t) : t_(t) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    while (true) {
      skip();
      if (pos_ >= t_.size()) return out;
      out.push_back(read());
    }
  }

 private:
  void advance() {
    if (t_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < t_.size()) {
      char c = t_[pos_];
      if (c == ';') {
        while (pos_ < t_.size() && t_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    SExpr e;
    e.line = line_;
    e.col = col_;
    char c = t_[pos_];
    if (c == ')') throw ParseError(line_, col_, "unexpected ')'");
    if (c == '(') {
      e.is_list = true;
      advance();
      while (true) {
        skip();
        if (pos_ >= t_.size())
          throw ParseError(e.line, e.col, "unbalanced '('");
        if (t_[pos_] == ')') {
          advance();
          return e;
        }
        e.items.push_back(read());
      }
    }
    size_t start = pos_;
    while (pos_ < t_.size()) {
      char d = t_[pos_];
      if (d == '(' || d == ')' || d == ';' || d == ' ' || d == '\t' ||
          d == '\n' || d == '\r')
        break;
      advance();
    }
    e.atom = std::string(t_.substr(start, pos_ - start));
    return e;
  }

  std::string_view t_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '-' || c == '.'))
      return false;
  return true;
}

struct SchemaScope {
  const std::vector<Predicate>& preds;
  const std::map<std::string, int>& pred_ids;
  const std::vector<std::string>& vars;

  Fact atom(const SExpr& e) const {
    const auto& items = e.expect_list("atom");
    if (items.empty()) e.fail("empty atom");
    const auto& name = items[0].expect_atom("predicate name");
    auto it = pred_ids.find(name);
    if (it == pred_ids.end()) items[0].fail("undeclared predicate '" + name + "'");
    const int arity = preds[it->second].arity;
    if (static_cast<int>(items.size()) - 1 != arity)
      e.fail("arity mismatch for '" + name + "'");
    std::vector<int32_t> args;
    for (size_t i = 1; i < items.size(); ++i) {
      const auto& v = items[i].expect_atom("variable");
      auto vt = std::find(vars.begin(), vars.end(), v);
      if (vt == vars.end()) items[i].fail("unbound variable '" + v + "'");
      args.push_back(static_cast<int32_t>(vt - vars.begin()));
    }
    return Fact(it->second, args);
  }

  FactSet conjunction(const SExpr& e) const {
    FactSet out;
    if (e.head_is("and")) {
      for (size_t i = 1; i < e.items.size(); ++i) {
        if (e.items[i].head_is("not"))
          e.items[i].fail("negative preconditions are not supported");
        out.push_back(atom(e.items[i]));
      }
    } else if (e.is_list && e.items.empty()) {
    } else {
      if (e.head_is("not")) e.fail("negative preconditions are not supported");
      out.push_back(atom(e));
    }
    return normalize(std::move(out));
  }

  Outcome outcome(const SExpr& e) const {
    Outcome o;
    auto lit = [&](const SExpr& x) {
      if (x.head_is("not")) {
        if (x.items.size() != 2) x.fail("malformed (not ...)");
        o.del.push_back(atom(x.items[1]));
      } else {
        o.add.push_back(atom(x));
      }
    };
    if (e.head_is("and")) {
      for (size_t i = 1; i < e.items.size(); ++i) lit(e.items[i]);
    } else if (e.is_list && e.items.empty()) {
    } else {
      lit(e);
    }
    o.add = normalize(std::move(o.add));
    o.del = normalize(std::move(o.del));
    for (const auto& f : o.add)
      if (std::binary_search(o.del.begin(), o.del.end(), f))
        e.fail("outcome adds and deletes the same atom");
    return o;
  }
};

}  // namespace

Domain parse_domain(std::string_view text) {
  auto top = SReader(text).read_all();
  if (top.size() != 1) {
    if (top.empty()) throw ParseError(1, 1, "empty domain");
    top[1].fail("expected a single (define ...) form");
  }
  const auto& def = top[0];
  if (!def.head_is("define")) def.fail("expected (define (domain NAME) ...)");
  const auto& items = def.items;
  if (items.size() < 2 || !items[1].head_is("domain") || items[1].items.size() != 2)
    def.fail("expected (domain NAME)");
  Domain d;
  d.name = items[1].items[1].expect_atom("domain name");

  std::vector<Predicate> preds;
  std::vector<const SExpr*> actions;
  bool seen_preds = false;
  for (size_t i = 2; i < items.size(); ++i) {
    const auto& sec = items[i];
    if (sec.head_is(":predicates")) {
      if (seen_preds) sec.fail("duplicate :predicates block");
      seen_preds = true;
      for (size_t j = 1; j < sec.items.size(); ++j) {
        const auto& p = sec.items[j].expect_list("predicate declaration");
        if (p.empty()) sec.items[j].fail("empty predicate declaration");
        Predicate pr;
        pr.name = p[0].expect_atom("predicate name");
        if (!valid_name(pr.name)) p[0].fail("invalid predicate name");
        for (size_t k = 1; k < p.size(); ++k) {
          const auto& v = p[k].expect_atom("variable");
          if (v.size() < 2 || v[0] != '?') p[k].fail("expected ?variable");
        }
        pr.arity = static_cast<int>(p.size()) - 1;
        if (pr.arity > kMaxArity) sec.items[j].fail("predicate arity too large");
        for (const auto& q : preds)
          if (q.name == pr.name) sec.items[j].fail("duplicate predicate '" + pr.name + "'");
        preds.push_back(pr);
      }
    } else if (sec.head_is(":action")) {
      actions.push_back(&sec);
    } else {
      sec.fail("unknown domain section");
    }
  }
  std::sort(preds.begin(), preds.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  std::map<std::string, int> pred_ids;
  for (size_t i = 0; i < preds.size(); ++i) pred_ids[preds[i].name] = static_cast<int>(i);
  d.predicates = preds;

  for (const auto* ap : actions) {
    const auto& a = ap->items;
    if (a.size() < 2) ap->fail("missing action name");
    ActionSchema s;
    s.name = a[1].expect_atom("action name");
    if (!valid_name(s.name)) a[1].fail("invalid action name");
    if (d.schema_index(s.name) >= 0) a[1].fail("duplicate action '" + s.name + "'");
    const SExpr* params = nullptr;
    const SExpr* pre = nullptr;
    const SExpr* eff = nullptr;
    for (size_t k = 2; k < a.size(); k += 2) {
      const auto& key = a[k].expect_atom("action keyword");
      if (k + 1 >= a.size()) a[k].fail("missing value for " + key);
      if (key == ":parameters") params = &a[k + 1];
      else if (key == ":precondition") pre = &a[k + 1];
      else if (key == ":effect") eff = &a[k + 1];
      else a[k].fail("unknown action keyword '" + key + "'");
    }
    if (!params || !pre || !eff)
      ap->fail("action needs :parameters, :precondition and :effect");
    for (const auto& v : params->expect_list("parameter list")) {
      const auto& name = v.expect_atom("parameter");
      if (name.size() < 2 || name[0] != '?') v.fail("expected ?variable");
      if (std::find(s.vars.begin(), s.vars.end(), name) != s.vars.end())
        v.fail("duplicate parameter");
      s.vars.push_back(name);
    }
    if (s.vars.size() > static_cast<size_t>(kMaxArity) * 2)
      params->fail("too many parameters");
    SchemaScope scope{d.predicates, pred_ids, s.vars};
    s.pre = scope.conjunction(*pre);
    if (eff->head_is("oneof")) {
      if (eff->items.size() < 2) eff->fail("oneof needs at least one outcome");
      for (size_t k = 1; k < eff->items.size(); ++k)
        s.outcomes.push_back(scope.outcome(eff->items[k]));
    } else {
      s.outcomes.push_back(scope.outcome(*eff));
    }
    d.schemata.push_back(std::move(s));
  }
  d.validate();
  return d;
}

static std::string lifted_text(const Domain& d, const ActionSchema& s,
                               const Fact& f) {
  std::string out = "(" + d.predicates[f.pred].name;
  for (int i = 0; i < f.arity; ++i) out += " " + s.vars[f.args[i]];
  return out + ")";
}

std::string serialize_domain(const Domain& d) {
  std::ostringstream os;
  os << "(define (domain " << d.name << ")\n  (:predicates";
  for (const auto& p : d.predicates) {
    os << " (" << p.name;
    for (int i = 0; i < p.arity; ++i) os << " ?x" << i;
    os << ")";
  }
  os << ")\n";
  for (const auto& s : d.schemata) {
    os << "  (:action " << s.name << "\n    :parameters (";
    for (size_t i = 0; i < s.vars.size(); ++i) os << (i ? " " : "") << s.vars[i];
    os << ")\n    :precondition (and";
    for (const auto& f : s.pre) os << " " << lifted_text(d, s, f);
    os << ")\n    :effect ";
    auto outcome = [&](const Outcome& o) {
      os << "(and";
      for (const auto& f : o.add) os << " " << lifted_text(d, s, f);
      for (const auto& f : o.del) os << " (not " << lifted_text(d, s, f) << ")";
      os << ")";
    };
    if (s.outcomes.size() == 1) {
      outcome(s.outcomes[0]);
    } else {
      os << "(oneof";
      for (const auto& o : s.outcomes) {
        os << " ";
        outcome(o);
      }
      os << ")";
    }
    os << ")\n";
  }
  os << ")\n";
  return os.str();
}

namespace {

Fact ground_atom(const Domain& d, const std::map<std::string, int>& objs,
                 const SExpr& e) {
  const auto& items = e.expect_list("fact");
  if (items.empty()) e.fail("empty fact");
  const auto& name = items[0].expect_atom("predicate name");
  int p = d.predicate_index(name);
  if (p < 0) items[0].fail("undeclared predicate '" + name + "'");
  if (static_cast<int>(items.size()) - 1 != d.predicates[p].arity)
    e.fail("arity mismatch for '" + name + "'");
  std::vector<int32_t> args;
  for (size_t i = 1; i < items.size(); ++i) {
    const auto& o = items[i].expect_atom("object");
    auto it = objs.find(o);
    if (it == objs.end()) items[i].fail("undeclared object '" + o + "'");
    args.push_back(it->second);
  }
  return Fact(p, args);
}

}  // namespace

HLProblem parse_problem(std::string_view text, const Domain& d) {
  auto top = SReader(text).read_all();
  std::vector<SExpr> secs;
  if (top.size() == 1 && top[0].head_is("define")) {
    for (size_t i = 1; i < top[0].items.size(); ++i) {
      if (top[0].items[i].head_is("problem")) continue;
      secs.push_back(top[0].items[i]);
    }
  } else {
    secs = top;
  }
  HLProblem p;
  std::map<std::string, int> objs;
  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  bool have_objects = false;
  for (const auto& s : secs) {
    if (s.head_is(":objects")) {
      if (have_objects) s.fail("duplicate :objects");
      have_objects = true;
      for (size_t i = 1; i < s.items.size(); ++i) {
        const auto& o = s.items[i].expect_atom("object name");
        if (!valid_name(o)) s.items[i].fail("invalid object name");
        if (objs.count(o)) s.items[i].fail("duplicate object '" + o + "'");
        objs[o] = static_cast<int>(p.objects.size());
        p.objects.push_back(o);
      }
    } else if (s.head_is(":init")) {
      if (init) s.fail("duplicate :init");
      init = &s;
    } else if (s.head_is(":goal")) {
      if (goal) s.fail("duplicate :goal");
      goal = &s;
    } else {
      s.fail("expected (:objects ...), (:init ...) or (:goal ...)");
    }
  }
  if (!init || !goal) throw ParseError(1, 1, "problem needs :init and :goal");
  for (size_t i = 1; i < init->items.size(); ++i)
    p.init.insert(ground_atom(d, objs, init->items[i]));
  FactSet g;
  std::vector<const SExpr*> gitems;
  for (size_t i = 1; i < goal->items.size(); ++i) {
    const auto& x = goal->items[i];
    if (x.head_is("and")) {
      for (size_t k = 1; k < x.items.size(); ++k) gitems.push_back(&x.items[k]);
    } else {
      gitems.push_back(&x);
    }
  }
  for (const auto* x : gitems) g.push_back(ground_atom(d, objs, *x));
  p.goal = normalize(std::move(g));
  return p;
}

std::string serialize_problem(const Domain& d, const HLProblem& p) {
  std::ostringstream os;
  os << "(:objects";
  for (const auto& o : p.objects) os << " " << o;
  os << ")\n(:init";
  for (const auto& f : sorted(p.init)) os << " " << fact_str(d, p.objects, f);
  os << ")\n(:goal";
  for (const auto& f : p.goal) os << " " << fact_str(d, p.objects, f);
  os << ")\n";
  return os.str();
}

// ---------------------------------------------------------------- traces

namespace {

class Cursor {
 public:
  Cursor(std::string_view t, int line) : t_(t), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, static_cast<int>(pos_) + 1, msg);
  }
  void ws() {
    while (pos_ < t_.size() && (t_[pos_] == ' ' || t_[pos_] == '\t' || t_[pos_] == '\r'))
      ++pos_;
  }
  bool peek(char c) {
    ws();
    return pos_ < t_.size() && t_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  bool at_end() {
    ws();
    return pos_ >= t_.size();
  }
  std::string name() {
    ws();
    bool quoted = accept('"');
    size_t start = pos_;
    while (pos_ < t_.size()) {
      char c = t_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')
        ++pos_;
      else
        break;
    }
    if (pos_ == start) fail("expected a name");
    std::string s(t_.substr(start, pos_ - start));
    if (quoted) expect('"');
    return s;
  }
  double number() {
    ws();
    size_t start = pos_;
    while (pos_ < t_.size()) {
      char c = t_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
          c == '.' || c == 'e' || c == 'E')
        ++pos_;
      else
        break;
    }
    double v = 0;
    auto r = std::from_chars(t_.data() + start, t_.data() + pos_, v);
    if (pos_ == start || r.ec != std::errc() || r.ptr != t_.data() + pos_) {
      pos_ = start;
      fail("expected a number");
    }
    return v;
  }
  std::vector<double> vec() {
    std::vector<double> v;
    expect('[');
    if (accept(']')) return v;
    do v.push_back(number());
    while (accept(','));
    expect(']');
    return v;
  }
  NamedAtom atom() {
    NamedAtom a;
    expect('(');
    a.pred = name();
    while (!peek(')')) a.args.push_back(name());
    expect(')');
    return a;
  }

 private:
  std::string_view t_;
  size_t pos_ = 0;
  int line_;
};

DemoStep parse_step(Cursor& c) {
  DemoStep st;
  bool ego = false, objects = false, action = false;
  c.expect('{');
  do {
    auto key = c.name();
    c.expect(':');
    if (key == "ego") {
      st.state.ego = c.vec();
      ego = true;
    } else if (key == "objects") {
      c.expect('{');
      if (!c.accept('}')) {
        do {
          auto n = c.name();
          c.expect(':');
          if (std::find(st.state.names.begin(), st.state.names.end(), n) !=
              st.state.names.end())
            c.fail("duplicate object '" + n + "'");
          st.state.names.push_back(n);
          st.state.objects.push_back(c.vec());
        } while (c.accept(','));
        c.expect('}');
      }
      objects = true;
    } else if (key == "action") {
      st.action = c.vec();
      action = true;
    } else {
      c.fail("unknown step key '" + key + "'");
    }
  } while (c.accept(','));
  c.expect('}');
  if (!ego || !objects || !action) c.fail("step needs ego, objects and action");
  return st;
}

Demo parse_demo(std::string_view line, int lineno) {
  Cursor c(line, lineno);
  Demo d;
  bool goal = false, steps = false;
  c.expect('{');
  do {
    auto key = c.name();
    c.expect(':');
    if (key == "goal") {
      c.expect('[');
      if (!c.accept(']')) {
        do d.goal.push_back(c.atom());
        while (c.accept(','));
        c.expect(']');
      }
      goal = true;
    } else if (key == "steps") {
      c.expect('[');
      if (!c.accept(']')) {
        do d.steps.push_back(parse_step(c));
        while (c.accept(','));
        c.expect(']');
      }
      steps = true;
    } else {
      c.fail("unknown demo key '" + key + "'");
    }
  } while (c.accept(','));
  c.expect('}');
  if (!c.at_end()) c.fail("trailing characters after demo");
  if (!goal || !steps) c.fail("demo needs goal and steps");

  if (!d.steps.empty()) {
    const auto& s0 = d.steps[0];
    const size_t n = s0.state.ego.size();
    const size_t dim = s0.action.size();
    const size_t m = s0.state.objects.empty() ? 0 : s0.state.objects[0].size();
    for (size_t i = 0; i < d.steps.size(); ++i) {
      const auto& st = d.steps[i];
      if (st.state.ego.size() != n) c.fail("ragged ego vectors at step " + std::to_string(i));
      if (st.state.names != s0.state.names)
        c.fail("object set changes at step " + std::to_string(i));
      for (const auto& o : st.state.objects)
        if (o.size() != m) c.fail("ragged object vectors at step " + std::to_string(i));
      const bool terminal = i + 1 == d.steps.size() && st.action.empty();
      if (!terminal && st.action.size() != dim)
        c.fail("ragged action vectors at step " + std::to_string(i));
    }
  }
  return d;
}

void append_vec(std::string& out, const std::vector<double>& v) {
  out += '[';
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  out += ']';
}

}  // namespace

std::string format_double(double x) {
  if (x == 0) return "0";
  // shortest text that parses back to the same double
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::vector<Demo> parse_traces(std::string_view text) {
  std::vector<Demo> out;
  size_t start = 0;
  int lineno = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto line = text.substr(start, end - start);
    bool blank = std::all_of(line.begin(), line.end(), [](char ch) {
      return ch == ' ' || ch == '\t' || ch == '\r';
    });
    if (!blank) out.push_back(parse_demo(line, lineno));
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::string serialize_demo(const Demo& demo) {
  std::string out = "{goal: [";
  for (size_t i = 0; i < demo.goal.size(); ++i) {
    if (i) out += ", ";
    out += "(" + demo.goal[i].pred;
    for (const auto& a : demo.goal[i].args) out += " " + a;
    out += ")";
  }
  out += "], steps: [";
  for (size_t i = 0; i < demo.steps.size(); ++i) {
    const auto& st = demo.steps[i];
    if (i) out += ", ";
    out += "{ego: ";
    append_vec(out, st.state.ego);
    out += ", objects: {";
    for (size_t k = 0; k < st.state.names.size(); ++k) {
      if (k) out += ", ";
      out += st.state.names[k] + ": ";
      append_vec(out, st.state.objects[k]);
    }
    out += "}, action: ";
    append_vec(out, st.action);
    out += "}";
  }
  out += "]}";
  return out;
}

std::string serialize_traces(const std::vector<Demo>& demos) {
  std::string out;
  for (const auto& d : demos) {
    out += serialize_demo(d);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- policies

HLPolicy parse_policy(std::string_view text, const Domain& d) {
  std::vector<Rule> rules;
  size_t start = 0;
  int lineno = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto line = text.substr(start, end - start);
    auto fail = [&](int col, const std::string& msg) {
      throw ParseError(lineno, col, msg);
    };
    size_t p = 0;
    while (p < line.size() && (line[p] == ' ' || line[p] == '\t')) ++p;
    if (p < line.size() && line[p] != ';' && line[p] != '\r') {
      size_t colon = line.find(':', p);
      if (colon == std::string_view::npos) fail(static_cast<int>(p) + 1, "expected '<val>:'");
      int val = 0;
      auto r = std::from_chars(line.data() + p, line.data() + colon, val);
      if (r.ec != std::errc() || r.ptr != line.data() + colon)
        fail(static_cast<int>(p) + 1, "malformed priority");
      auto rest = line.substr(colon + 1);
      std::vector<SExpr> xs;
      try {
        xs = SReader(rest).read_all();
      } catch (const ParseError& e) {
        fail(static_cast<int>(colon) + 1 + e.col, e.what());
      }
      auto bad = [&](const std::string& msg) { fail(static_cast<int>(colon) + 2, msg); };
      if (xs.size() != 5 || !xs[0].head_is(":vars") || !xs[1].head_is(":state") ||
          !xs[2].head_is(":goal") || !xs[3].is("=>") || !xs[4].is_list)
        bad("expected (:vars ...) (:state ...) (:goal ...) => (schema ...)");
      Rule rule;
      rule.val = val - 1;
      std::vector<std::string> vars;
      for (size_t i = 1; i < xs[0].items.size(); ++i) {
        const auto& v = xs[0].items[i];
        if (v.is_list || v.atom.size() < 2 || v.atom[0] != '?') bad("expected ?variable");
        if (std::find(vars.begin(), vars.end(), v.atom) != vars.end()) bad("duplicate variable");
        vars.push_back(v.atom);
      }
      rule.n_vars = static_cast<int32_t>(vars.size());
      auto var_id = [&](const SExpr& e) -> int32_t {
        if (e.is_list) bad("expected ?variable");
        auto it = std::find(vars.begin(), vars.end(), e.atom);
        if (it == vars.end()) bad("undeclared variable '" + e.atom + "'");
        return static_cast<int32_t>(it - vars.begin());
      };
      auto atoms = [&](const SExpr& sec, FactSet& out) {
        for (size_t i = 1; i < sec.items.size(); ++i) {
          const auto& a = sec.items[i];
          if (!a.is_list || a.items.empty() || a.items[0].is_list) bad("malformed atom");
          int pid = d.predicate_index(a.items[0].atom);
          if (pid < 0) bad("undeclared predicate '" + a.items[0].atom + "'");
          if (static_cast<int>(a.items.size()) - 1 != d.predicates[pid].arity)
            bad("arity mismatch for '" + a.items[0].atom + "'");
          std::vector<int32_t> args;
          for (size_t k = 1; k < a.items.size(); ++k) args.push_back(var_id(a.items[k]));
          out.push_back(Fact(pid, args));
        }
        out = normalize(std::move(out));
      };
      atoms(xs[1], rule.scond);
      atoms(xs[2], rule.gcond);
      const auto& head = xs[4].items;
      if (head.empty() || head[0].is_list) bad("malformed action head");
      rule.schema = d.schema_index(head[0].atom);
      if (rule.schema < 0) bad("unknown schema '" + head[0].atom + "'");
      for (size_t k = 1; k < head.size(); ++k) rule.head.push_back(var_id(head[k]));
      try {
        validate_rule(d, rule);
      } catch (const StructuralError& e) {
        bad(e.what());
      }
      rules.push_back(std::move(rule));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return make_policy(d, std::move(rules));
}

std::string serialize_policy(const Domain& d, const HLPolicy& p) {
  std::string out;
  for (const auto& r : p.rules) {
    out += rule_str(d, r);
    out += '\n';
  }
  return out;
}

FactSet resolve(const Domain& d, const std::vector<std::string>& objects,
                const std::vector<NamedAtom>& atoms) {
  FactSet out;
  for (const auto& a : atoms) {
    int p = d.predicate_index(a.pred);
    if (p < 0) throw StructuralError("undeclared predicate '" + a.pred + "'");
    if (static_cast<int>(a.args.size()) != d.predicates[p].arity)
      throw StructuralError("arity mismatch for '" + a.pred + "'");
    std::vector<int32_t> args;
    for (const auto& o : a.args) {
      auto it = std::find(objects.begin(), objects.end(), o);
      if (it == objects.end()) throw StructuralError("unknown object '" + o + "'");
      args.push_back(static_cast<int32_t>(it - objects.begin()));
    }
    out.push_back(Fact(p, args));
  }
  return normalize(std::move(out));
}

std::vector<NamedAtom> unresolve(const Domain& d,
                                 const std::vector<std::string>& objects,
                                 const FactSet& facts) {
  std::vector<NamedAtom> out;
  for (const auto& f : facts) {
    NamedAtom a;
    a.pred = d.predicates.at(f.pred).name;
    for (int i = 0; i < f.arity; ++i) a.args.push_back(objects.at(f.args[i]));
    out.push_back(std::move(a));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace bison
