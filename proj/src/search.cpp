#include "bison/search.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "bison/log.hpp"
#include "bison/policy.hpp"

namespace bison {

const GroundAction* SearchPolicy::lookup(const HLState& s) const {
  auto it = map.find(sorted(s));
  return it == map.end() ? nullptr : &it->second;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
  Clock::time_point end;
  bool active = false;
  explicit Deadline(double s) {
    if (s > 0) {
      active = true;
      end = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(s));
    }
  }
  bool passed() const { return active && Clock::now() > end; }
};

bool contains(const FactSet& s, const Fact& f) {
  return std::binary_search(s.begin(), s.end(), f);
}

bool subset_of(const FactSet& a, const FactSet& s) {
  return std::includes(s.begin(), s.end(), a.begin(), a.end());
}

FactSet apply_det(const FactSet& s, const DetAction& a) {
  FactSet tmp;
  tmp.reserve(s.size() + a.add.size());
  std::set_difference(s.begin(), s.end(), a.del.begin(), a.del.end(),
                      std::back_inserter(tmp));
  FactSet out;
  out.reserve(tmp.size() + a.add.size());
  std::set_union(tmp.begin(), tmp.end(), a.add.begin(), a.add.end(),
                 std::back_inserter(out));
  return out;
}

size_t goal_count(const FactSet& s, const FactSet& g) {
  size_t n = 0;
  for (const auto& f : g) n += !contains(s, f);
  return n;
}

// Additive delete-relaxation estimate of the cost of reaching g from s.
size_t h_add(const std::vector<std::vector<DetAction>>& by_action, const FactSet& s,
             const FactSet& g) {
  constexpr size_t kInf = std::numeric_limits<size_t>::max() / 4;
  std::unordered_map<Fact, size_t, FactHash> cost;
  for (const auto& f : s) cost[f] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& outs : by_action)
      for (const auto& a : outs) {
        size_t c = 1;
        bool ok = true;
        for (const auto& f : a.pre) {
          auto it = cost.find(f);
          if (it == cost.end()) {
            ok = false;
            break;
          }
          c += it->second;
        }
        if (!ok) continue;
        for (const auto& f : a.add) {
          auto [it, fresh] = cost.try_emplace(f, c);
          if (fresh || c < it->second) {
            it->second = c;
            changed = true;
          }
        }
      }
  }
  size_t h = 0;
  for (const auto& f : g) {
    auto it = cost.find(f);
    if (it == cost.end()) return kInf;
    h += it->second;
  }
  return h;
}

struct VecHash {
  size_t operator()(const FactSet& v) const noexcept {
    FactHash fh;
    uint64_t h = v.size();
    for (const auto& f : v) h = h * 0x100000001b3ULL ^ fh(f);
    return static_cast<size_t>(h);
  }
};

}  // namespace

std::vector<DetAction> ground_reachable(const Domain& d, const HLProblem& p,
                                        bool* goal_reachable) {
  // Delete-relaxed reachability fixpoint, grounding schemata by joining their
  // preconditions against the reached facts.
  HLState reached = p.init;
  std::set<GroundAction> actions;
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<GroundAction> fresh;
    for (auto& a : applicable_actions(d, reached, p.objects.size()))
      if (!actions.count(a)) fresh.push_back(std::move(a));
    for (auto& a : fresh) {
      for (const auto& o : d.schemata[a.schema].outcomes)
        for (const auto& f : o.add)
          if (reached.insert(ground(f, a.args)).second) grew = true;
      actions.insert(std::move(a));
    }
  }
  if (goal_reachable) *goal_reachable = is_goal(reached, p.goal);
  std::vector<DetAction> out;
  for (const auto& a : actions) {
    const auto& s = d.schemata[a.schema];
    for (size_t o = 0; o < s.outcomes.size(); ++o)
      out.push_back({a, o, ground(s.pre, a.args), ground(s.outcomes[o].add, a.args),
                     ground(s.outcomes[o].del, a.args)});
  }
  return out;
}

std::optional<Plan> find_plan(const Domain& d, const HLProblem& p,
                              const SearchLimits& lim, SearchStats* stats) {
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  st = {};
  Deadline deadline(lim.time_limit_s);
  const FactSet init = sorted(p.init);
  if (subset_of(p.goal, init)) {
    st.status = SearchStatus::solved;
    return Plan{};
  }
  bool reachable = false;
  const auto acts = ground_reachable(d, p, &reachable);
  st.ground_actions = acts.size();
  if (!reachable) {
    st.status = SearchStatus::unsolvable;
    st.reason = "goal unreachable under the delete relaxation";
    return std::nullopt;
  }

  struct Node {
    FactSet state;
    int64_t parent;
    int32_t act;
  };
  std::vector<Node> nodes;
  std::unordered_set<FactSet, VecHash> seen;
  using Entry = std::tuple<size_t, size_t>;  // (h, node id) -> FIFO on ties
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  size_t stored = init.size();
  nodes.push_back({init, -1, -1});
  seen.insert(init);
  open.push({goal_count(init, p.goal), 0});

  auto budget = [&](const char* why) {
    st.status = SearchStatus::budget;
    st.reason = why;
    log::info("find_plan: {} after {} expansions", why, st.expanded);
    return std::nullopt;
  };

  while (!open.empty()) {
    auto [h, id] = open.top();
    open.pop();
    if (st.expanded >= lim.max_expansions) return budget("expansion budget exhausted");
    if (deadline.passed()) return budget("time limit reached");
    ++st.expanded;
    for (size_t ai = 0; ai < acts.size(); ++ai) {
      const auto& a = acts[ai];
      const FactSet& s = nodes[id].state;
      if (!subset_of(a.pre, s)) continue;
      FactSet child = apply_det(s, a);
      if (seen.count(child)) continue;
      ++st.generated;
      stored += child.size();
      if (stored > lim.max_stored_facts) return budget("memory budget exhausted");
      seen.insert(child);
      const size_t ch = goal_count(child, p.goal);
      nodes.push_back({std::move(child), static_cast<int64_t>(id), static_cast<int32_t>(ai)});
      const size_t cid = nodes.size() - 1;
      if (ch == 0) {
        Plan plan;
        for (int64_t n = static_cast<int64_t>(cid); nodes[n].parent >= 0; n = nodes[n].parent) {
          plan.actions.push_back(acts[nodes[n].act].action);
          plan.outcomes.push_back(acts[nodes[n].act].outcome);
        }
        std::reverse(plan.actions.begin(), plan.actions.end());
        std::reverse(plan.outcomes.begin(), plan.outcomes.end());
        st.status = SearchStatus::solved;
        return plan;
      }
      open.push({ch, cid});
    }
  }
  st.status = SearchStatus::unsolvable;
  st.reason = "search space exhausted";
  return std::nullopt;
}

namespace {

constexpr size_t kHaddMaxActions = 2000;

struct AndOr {
  const Domain& d;
  const FactSet& goal;
  const SearchLimits& lim;
  SearchStats& st;
  Deadline deadline;
  std::vector<std::vector<DetAction>> by_action;  // outcomes grouped
  std::unordered_map<FactSet, size_t, VecHash> failed_at;  // max failed depth
  std::unordered_map<FactSet, size_t, VecHash> solved_at;  // min solved depth
  std::unordered_set<FactSet, VecHash> on_path;
  std::map<FactSet, GroundAction> choice;
  size_t stored = 0;
  bool out_of_budget = false;
  bool use_hadd = false;

  bool solve(const FactSet& s, size_t depth) {
    if (subset_of(goal, s)) return true;
    if (depth == 0 || out_of_budget) return false;
    if (auto it = solved_at.find(s); it != solved_at.end() && it->second <= depth)
      return true;
    if (auto it = failed_at.find(s); it != failed_at.end() && it->second >= depth)
      return false;
    if (on_path.count(s)) return false;
    if (st.expanded >= lim.max_expansions || stored > lim.max_stored_facts ||
        deadline.passed()) {
      out_of_budget = true;
      return false;
    }
    ++st.expanded;
    stored += s.size();
    on_path.insert(s);

    // Order applicable actions by the worst goal count over their outcomes,
    // then (small groundings only) the worst h_add; remaining ties keep
    // canonical order.
    std::vector<std::tuple<size_t, size_t, size_t>> order;
    for (size_t i = 0; i < by_action.size(); ++i) {
      const auto& outs = by_action[i];
      if (!subset_of(outs[0].pre, s)) continue;
      size_t worst = 0, worst_add = 0;
      for (const auto& o : outs) {
        const FactSet child = apply_det(s, o);
        worst = std::max(worst, goal_count(child, goal));
        if (use_hadd) worst_add = std::max(worst_add, h_add(by_action, child, goal));
      }
      order.push_back({worst, worst_add, i});
    }
    std::stable_sort(order.begin(), order.end());
    bool ok = false;
    for (const auto& [h, h2, i] : order) {
      bool all = true;
      for (const auto& o : by_action[i]) {
        FactSet child = apply_det(s, o);
        ++st.generated;
        if (child == s || !solve(child, depth - 1)) {
          all = false;
          break;
        }
      }
      if (all) {
        choice[s] = by_action[i][0].action;
        ok = true;
        break;
      }
      if (out_of_budget) break;
    }
    on_path.erase(s);
    if (ok) {
      solved_at[s] = depth;
    } else if (!out_of_budget) {
      auto& f = failed_at[s];
      f = std::max(f, depth);
    }
    return ok;
  }
};

}  // namespace

std::optional<SearchPolicy> find_policy(const Domain& d, const HLProblem& p,
                                        size_t depth_cap,
                                        const SearchLimits& lim,
                                        SearchStats* stats) {
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  st = {};
  if (depth_cap == 0) depth_cap = std::max<size_t>(1, 4 * p.goal.size() * p.objects.size());
  const FactSet init = sorted(p.init);
  if (subset_of(p.goal, init)) {
    st.status = SearchStatus::solved;
    return SearchPolicy{};
  }
  bool reachable = false;
  auto acts = ground_reachable(d, p, &reachable);
  st.ground_actions = acts.size();
  if (!reachable) {
    st.status = SearchStatus::unsolvable;
    st.reason = "goal unreachable under the delete relaxation";
    return std::nullopt;
  }
  AndOr s{d, p.goal, lim, st, Deadline(lim.time_limit_s), {}, {}, {}, {}, {}, 0, false};
  for (auto& a : acts) {
    if (s.by_action.empty() || s.by_action.back()[0].action != a.action)
      s.by_action.push_back({});
    s.by_action.back().push_back(std::move(a));
  }
  s.use_hadd = st.ground_actions <= kHaddMaxActions;
  if (!s.solve(init, depth_cap)) {
    st.status = s.out_of_budget ? SearchStatus::budget : SearchStatus::unsolvable;
    st.reason = s.out_of_budget ? "budget exhausted" : "no acyclic policy within depth cap";
    return std::nullopt;
  }
  // Keep only the states reachable from init under the chosen actions.
  SearchPolicy pol;
  std::vector<FactSet> stack{init};
  std::set<FactSet> visited;
  while (!stack.empty()) {
    FactSet cur = std::move(stack.back());
    stack.pop_back();
    if (subset_of(p.goal, cur) || !visited.insert(cur).second) continue;
    auto it = s.choice.find(cur);
    if (it == s.choice.end()) continue;
    pol.map[cur] = it->second;
    const auto& sc = d.schemata[it->second.schema];
    for (size_t o = 0; o < sc.outcomes.size(); ++o) {
      DetAction da{it->second, o, {}, ground(sc.outcomes[o].add, it->second.args),
                   ground(sc.outcomes[o].del, it->second.args)};
      stack.push_back(apply_det(cur, da));
    }
  }
  st.status = SearchStatus::solved;
  return pol;
}

bool validate_plan(const Domain& d, const HLProblem& p, const Plan& plan) {
  HLState s = p.init;
  for (size_t i = 0; i < plan.actions.size(); ++i) {
    if (!applicable(d, s, plan.actions[i])) return false;
    apply_outcome(d, s, plan.actions[i], plan.outcomes[i]);
  }
  return is_goal(s, p.goal);
}

bool policy_closed(const Domain& d, const HLProblem& p, const SearchPolicy& pol,
                   size_t depth_cap) {
  struct Item {
    HLState s;
    size_t depth;
  };
  std::vector<Item> stack{{p.init, 0}};
  while (!stack.empty()) {
    Item it = std::move(stack.back());
    stack.pop_back();
    if (is_goal(it.s, p.goal)) continue;
    if (it.depth >= depth_cap) return false;
    const GroundAction* a = pol.lookup(it.s);
    if (!a || !applicable(d, it.s, *a)) return false;
    for (auto& n : successors(d, it.s, *a)) stack.push_back({std::move(n), it.depth + 1});
  }
  return true;
}

}  // namespace bison
