#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "bison/bench.hpp"
#include "bison/bilevel.hpp"
#include "bison/envs.hpp"
#include "bison/gnn.hpp"
#include "bison/io.hpp"
#include "bison/learner.hpp"
#include "bison/log.hpp"
#include "bison/search.hpp"

using namespace bison;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  uint64_t seed = 0;
  size_t jobs = 1;
  std::string out;
  bool no_timing = false;
};

void emit(const Global& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_file(g.out, text);
  }
}

EnvKind env_kind(const std::string& s) {
  try {
    return parse_env_kind(s);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

std::string read_input(const std::string& path) {
  try {
    return read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

GnnParams load_weights(const std::string& path) {
  try {
    return parse_params(read_input(path));
  } catch (const DataError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

// --domain must agree with the built-in domain of --env.
void check_domain(const std::string& path, EnvKind k) {
  if (path.empty()) return;
  const Domain d = parse_domain(read_input(path));
  if (!(d == env_domain(k)))
    throw DataError("domain '" + path + "' does not match the " + env_name(k) + " domain");
}

std::vector<Demo> load_demos(const std::string& path) {
  return parse_traces(read_input(path));
}

HLPolicy load_policy(const std::string& path, const Domain& d) {
  return parse_policy(read_input(path), d);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- gen-demos

struct GenOpts {
  std::string env;
  int objects = 3;
  size_t count = 200;
  double teleport = 0.001;
};

int cmd_gen_demos(const Global& g, const GenOpts& o) {
  EnvConfig cfg;
  cfg.kind = env_kind(o.env);
  cfg.n_objects = o.objects;
  cfg.seed = g.seed;
  cfg.teleport_prob = o.teleport;
  DemoGenStats st;
  auto demos = generate_demos(cfg, o.count, g.jobs, &st);
  log::info("gen-demos: {} demos from {} attempts ({} discarded)", demos.size(),
            st.attempts, st.discarded);
  if (demos.size() < o.count)
    throw DataError("only " + std::to_string(demos.size()) + " of " +
                    std::to_string(o.count) + " demos reached the goal");
  emit(g, serialize_traces(demos));
  return kOk;
}

// --- learn-hl

struct LearnOpts {
  std::string env, demos, domain;
  size_t max_subgoals = 256;
};

int cmd_learn_hl(const Global& g, const LearnOpts& o) {
  const EnvKind k = env_kind(o.env);
  check_domain(o.domain, k);
  const Domain& d = env_domain(k);
  const auto demos = load_demos(o.demos);
  LearnStats st;
  LearnConfig cfg;
  cfg.max_subgoals = o.max_subgoals;
  const auto t0 = std::chrono::steady_clock::now();
  HLPolicy pol = learn_hl_policy(demos, d, env_labelling(k), cfg, &st);
  log::info("learn-hl: {} rules from {} demos ({} skipped) in {:.3f}s", pol.rules.size(),
            st.demos_used, st.demos_skipped, seconds_since(t0));
  emit(g, serialize_policy(d, pol));
  return kOk;
}

// --- train-ll

struct TrainOpts {
  std::string env, demos, domain, loss_out;
  TrainConfig cfg;
};

int cmd_train_ll(const Global& g, TrainOpts o) {
  const EnvKind k = env_kind(o.env);
  check_domain(o.domain, k);
  if (g.out.empty() || g.out == "-") throw DataError("train-ll needs --out for the .bsw file");
  const Domain& d = env_domain(k);
  const auto demos = load_demos(o.demos);
  o.cfg.seed = g.seed;
  TrainStats st;
  GnnParams p;
  try {
    p = train(demos, d, env_labelling(k), o.cfg, &st);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  log::info("train-ll: {} samples, {} params, loss {} -> {}", st.samples, p.count(),
            st.loss.empty() ? 0.0 : st.loss.front(), st.loss.empty() ? 0.0 : st.loss.back());
  save_params(g.out, p);
  if (!o.loss_out.empty()) {
    std::string csv = "iteration,loss\n";
    for (size_t i = 0; i < st.loss.size(); ++i)
      csv += std::to_string(i + 1) + "," + format_double(st.loss[i]) + "\n";
    write_file(o.loss_out, csv);
  }
  return kOk;
}

// --- eval

struct EvalOpts {
  std::string strategies = "bison", env, objects = "1..10", policy, ll = "oracle",
              weights, stub_weights, summary;
  size_t episodes = 10;
  size_t seeds = 1;
  double timeout = 60;
  double teleport = 0.001;
  size_t step_cap = 0;
};

int cmd_eval(const Global& g, const EvalOpts& o) {
  const EnvKind k = env_kind(o.env);
  const Domain& d = env_domain(k);
  std::pair<int, int> range;
  try {
    range = parse_range(o.objects);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::vector<Strategy> strategies;
  {
    std::stringstream ss(o.strategies);
    for (std::string s; std::getline(ss, s, ',');) {
      try {
        strategies.push_back(parse_strategy(s));
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
    }
  }
  if (o.ll != "oracle" && o.ll != "gnn") throw DataError("--ll must be oracle or gnn");

  std::optional<HLPolicy> pol;
  std::optional<GnnParams> gnn, stub;
  auto need_policy = [&] {
    if (!pol) {
      if (o.policy.empty()) throw DataError("this strategy needs --policy");
      pol = load_policy(o.policy, d);
    }
  };
  auto check_params = [&](const GnnParams& p, const std::string& path) {
    if (p.domain != d.name)
      throw DataError("weights '" + path + "' were trained on domain '" + p.domain + "'");
  };
  for (Strategy s : strategies) {
    if (s == Strategy::bison || s == Strategy::pure_nn_stub) need_policy();
    if (s == Strategy::pure_nn_stub && !stub) {
      if (o.stub_weights.empty()) throw DataError("pure_nn_stub needs --stub-weights");
      stub = load_weights(o.stub_weights);
      check_params(*stub, o.stub_weights);
      if (!stub->zero_action) throw DataError("--stub-weights were not trained with --zero-action");
    }
  }
  if (o.ll == "gnn") {
    if (o.weights.empty()) throw DataError("--ll gnn needs --weights");
    gnn = load_weights(o.weights);
    check_params(*gnn, o.weights);
  }

  std::vector<EvalRow> rows;
  for (Strategy s : strategies) {
    Executor ex;
    ex.strategy = s;
    ex.hl_policy = pol ? &*pol : nullptr;
    ex.ll.kind = k;
    if (s == Strategy::pure_nn_stub) ex.ll.gnn = &*stub;
    else if (gnn && s != Strategy::oracle) ex.ll.gnn = &*gnn;
    ex.limits.time_limit_s = o.timeout;
    ex.step_cap = o.step_cap;
    for (size_t si = 0; si < o.seeds; ++si) {
      for (int n = range.first; n <= range.second; ++n) {
        EnvConfig cfg;
        cfg.kind = k;
        cfg.n_objects = n;
        cfg.seed = g.seed + si;
        cfg.teleport_prob = o.teleport;
        const auto res = run_episodes(cfg, ex, o.episodes, g.jobs);
        for (size_t e = 0; e < res.size(); ++e)
          rows.push_back({strategy_name(s), env_name(k), n, e, res[e], cfg.seed});
      }
    }
  }
  std::string csv = std::string(kEvalHeader) + "\n";
  for (const auto& r : rows) csv += eval_csv_row(r, !g.no_timing) + "\n";
  emit(g, csv);
  if (!o.summary.empty()) {
    std::string s = std::string(kAggregateHeader) + "\n";
    for (const auto& a : aggregate(rows)) s += aggregate_csv_row(a) + "\n";
    write_file(o.summary, s);
  }
  for (const auto& a : aggregate(rows))
    log::info("eval: {} on {}: success {:.3f} +- {:.3f}", a.strategy, a.env, a.mean, a.std);
  return kOk;
}

// --- bench-hl

struct BenchOpts {
  std::string n_list = "3,10,100,1000,10000", policy;
  double timeout = 60;
  size_t baseline_max_n = 1000;
};

int cmd_bench_hl(const Global& g, const BenchOpts& o) {
  const Domain& d = env_domain(EnvKind::blocks);
  std::vector<size_t> ns;
  {
    std::stringstream ss(o.n_list);
    for (std::string s; std::getline(ss, s, ',');) {
      try {
        ns.push_back(static_cast<size_t>(parse_range(s).first));
      } catch (const std::invalid_argument& e) {
        throw DataError(std::string("bad --n-list: ") + e.what());
      }
    }
  }
  HLPolicy pol;
  if (!o.policy.empty()) {
    pol = load_policy(o.policy, d);
  } else {
    EnvConfig cfg;
    cfg.kind = EnvKind::blocks;
    cfg.n_objects = 3;
    cfg.seed = g.seed;
    pol = learn_hl_policy(generate_demos(cfg, 200, g.jobs), d, env_labelling(EnvKind::blocks));
  }
  std::string csv = "n,solved,hl_steps,seconds,internal_baseline_status,internal_baseline_seconds\n";
  auto t = [&](double s) { return format_double(g.no_timing ? 0.0 : s); };
  for (size_t n : ns) {
    const HLProblem p = blocks_hl_instance(n, g.seed + n);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = solve_hl(d, pol, p, fixed_outcome(0), 100 * n + 100);
    const double secs = seconds_since(t0);
    const bool solved = res.status == SolveStatus::solved && secs <= o.timeout;
    std::string bstatus = "skipped";
    double bsecs = 0;
    if (n <= o.baseline_max_n) {
      SearchLimits lim;
      lim.time_limit_s = o.timeout;
      SearchStats st;
      const auto b0 = std::chrono::steady_clock::now();
      const auto plan = find_plan(d, p, lim, &st);
      bsecs = seconds_since(b0);
      bstatus = plan ? "solved"
                     : (st.status == SearchStatus::budget ? "budget" : "unsolved");
    }
    log::info("bench-hl: n={} solved={} steps={} {:.3f}s baseline={}", n, solved,
              res.actions.size(), secs, bstatus);
    csv += std::to_string(n) + "," + (solved ? "1" : "0") + "," +
           std::to_string(res.actions.size()) + "," + t(secs) + "," + bstatus + "," + t(bsecs) +
           "\n";
  }
  emit(g, csv);
  return kOk;
}

// --- check

struct CheckOpts {
  std::string env, demos, policy;
};

int cmd_check(const Global& g, const CheckOpts& o) {
  const EnvKind k = env_kind(o.env);
  const Domain& d = env_domain(k);
  const HLPolicy pol = load_policy(o.policy, d);
  std::string report;
  size_t bad = 0;
  for (size_t i = 0; i < pol.rules.size(); ++i) {
    const auto& r = pol.rules[i];
    try {
      validate_rule(d, r);
    } catch (const std::exception& e) {
      ++bad;
      report += "rule " + std::to_string(i + 1) + ": invalid: " + e.what() + "\n";
    }
    if (has_unconstrained_vars(r))
      report += "rule " + std::to_string(i + 1) + ": warning: unconstrained variable\n";
  }
  if (!o.demos.empty()) {
    const auto demos = load_demos(o.demos);
    size_t ok = 0;
    for (size_t i = 0; i < demos.size(); ++i) {
      NdrpReport rep;
      try {
        rep = check_ndrp(d, demos[i], env_labelling(k), pol);
      } catch (const std::exception& e) {
        rep = {false, 0, e.what()};
      }
      if (rep.ok) {
        ++ok;
      } else {
        ++bad;
        report += "demo " + std::to_string(i) + ": ndrp violation at step " +
                  std::to_string(rep.step) + ": " + rep.reason + "\n";
      }
    }
    report += "ndrp: " + std::to_string(ok) + "/" + std::to_string(demos.size()) + " demos pass\n";
  }
  report += "rules: " + std::to_string(pol.rules.size()) + "\n";
  report += bad ? "check: FAIL\n" : "check: OK\n";
  emit(g, report);
  return bad ? kData : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  log::init();
  CLI::App app{"bison: bilevel policies from demonstrations"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output file (default stdout)");
  app.add_flag("--no-timing", g.no_timing, "write timing columns as 0");

  GenOpts gen;
  auto* c_gen = app.add_subcommand("gen-demos", "generate oracle demonstrations (.bst)");
  c_gen->add_option("--env", gen.env, "blocks|blocks-noisy|factory|gacha|pick-place")->required();
  c_gen->add_option("--objects", gen.objects, "objects per problem")->check(CLI::PositiveNumber);
  c_gen->add_option("--count", gen.count, "goal-achieving demos to keep");
  c_gen->add_option("--teleport-prob", gen.teleport, "blocks-noisy teleport probability")
      ->check(CLI::Range(0.0, 1.0));

  LearnOpts learn;
  auto* c_learn = app.add_subcommand("learn-hl", "learn an HL policy (.bsp) from demos");
  c_learn->add_option("--env", learn.env)->required();
  c_learn->add_option("--demos", learn.demos, ".bst file")->required();
  c_learn->add_option("--domain", learn.domain, ".bsd file, must match --env");
  c_learn->add_option("--max-subgoals", learn.max_subgoals)->check(CLI::PositiveNumber);

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train-ll", "train the GNN LL policy (.bsw)");
  c_train->add_option("--env", tr.env)->required();
  c_train->add_option("--demos", tr.demos, ".bst file")->required();
  c_train->add_option("--domain", tr.domain, ".bsd file, must match --env");
  c_train->add_option("--iterations", tr.cfg.iterations);
  c_train->add_option("--lr", tr.cfg.lr);
  c_train->add_option("--batch", tr.cfg.batch)->check(CLI::PositiveNumber);
  c_train->add_option("--hidden", tr.cfg.hidden)->check(CLI::PositiveNumber);
  c_train->add_option("--layers", tr.cfg.layers)->check(CLI::PositiveNumber);
  c_train->add_flag("--zero-action", tr.cfg.zero_action, "train the PureNN-style ablation stub");
  c_train->add_option("--loss-out", tr.loss_out, "per-iteration loss CSV");

  EvalOpts ev;
  auto* c_eval = app.add_subcommand("eval", "run episodes, write CSV rows");
  c_eval->add_option("--strategy", ev.strategies,
                     "comma list of bison,det_plan,det_replan,ndt_plan,ndt_replan,oracle,pure_nn_stub");
  c_eval->add_option("--env", ev.env)->required();
  c_eval->add_option("--objects", ev.objects, "a..b");
  c_eval->add_option("--episodes", ev.episodes);
  c_eval->add_option("--seeds", ev.seeds, "seeds seed..seed+k-1")->check(CLI::PositiveNumber);
  c_eval->add_option("--policy", ev.policy, ".bsp file");
  c_eval->add_option("--ll", ev.ll, "oracle|gnn");
  c_eval->add_option("--weights", ev.weights, ".bsw file for --ll gnn");
  c_eval->add_option("--stub-weights", ev.stub_weights, ".bsw file for pure_nn_stub");
  c_eval->add_option("--timeout", ev.timeout, "planner time limit per call (s)");
  c_eval->add_option("--teleport-prob", ev.teleport)->check(CLI::Range(0.0, 1.0));
  c_eval->add_option("--step-cap", ev.step_cap, "0 = 2048 n");
  c_eval->add_option("--summary", ev.summary, "aggregate CSV (mean/std over seeds)");

  BenchOpts bench;
  auto* c_bench = app.add_subcommand("bench-hl", "HL Blocks scalability benchmark");
  c_bench->add_option("--n-list", bench.n_list, "comma list of block counts");
  c_bench->add_option("--policy", bench.policy, ".bsp file (default: learn from n=3 demos)");
  c_bench->add_option("--timeout", bench.timeout, "seconds");
  c_bench->add_option("--baseline-max-n", bench.baseline_max_n,
                      "largest n given to the internal-baseline planner");

  CheckOpts chk;
  auto* c_check = app.add_subcommand("check", "NDRP and policy diagnostics");
  c_check->add_option("--env", chk.env)->required();
  c_check->add_option("--policy", chk.policy, ".bsp file")->required();
  c_check->add_option("--demos", chk.demos, ".bst file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*c_gen) return cmd_gen_demos(g, gen);
    if (*c_learn) return cmd_learn_hl(g, learn);
    if (*c_train) return cmd_train_ll(g, tr);
    if (*c_eval) return cmd_eval(g, ev);
    if (*c_bench) return cmd_bench_hl(g, bench);
    if (*c_check) return cmd_check(g, chk);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const AbstractionGap& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
