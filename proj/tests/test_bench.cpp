#include <doctest.h>

#include <cmath>
#include <map>

#include "bison/bench.hpp"
#include "bison/envs.hpp"
#include "helpers.hpp"

using namespace bison;
using namespace testutil;

TEST_CASE("blocks_hl_instance") {
  const Domain& d = env_domain(EnvKind::blocks);
  HLProblem p = blocks_hl_instance(3, 1);
  CHECK(p.objects.size() == 7);
  CHECK(p.goal.size() == 3);
  CHECK(p.init.size() == 8);
  std::set<int32_t> pads;
  for (const auto& g : p.goal) {
    CHECK(g.pred == d.predicate_index("at"));
    CHECK(p.objects[g.args[0]][0] == 'b');
    CHECK(p.objects[g.args[1]][0] == 'p');
    pads.insert(g.args[1]);
  }
  CHECK(pads.size() == 3);
  CHECK(blocks_hl_instance(3, 1) == p);
}

TEST_CASE("csv rows") {
  EvalRow r{"bison", "blocks", 3, 7, {}, 42};
  r.result.success = true;
  r.result.ll_steps = 120;
  r.result.replans = 2;
  r.result.wall_time = 0.5;
  CHECK(eval_csv_row(r) == "bison,blocks,3,7,1,120,2,0.5,42");
  CHECK(eval_csv_row(r, false) == "bison,blocks,3,7,1,120,2,0,42");
  CHECK(std::string(kEvalHeader).rfind("strategy,env,n,episode,success,steps,replans,wall_time", 0) == 0);
}

TEST_CASE("parse_range") {
  CHECK(parse_range("1..5") == std::pair{1, 5});
  CHECK(parse_range("3") == std::pair{3, 3});
  for (const char* bad : {"", "0", "5..1", "a..b", "1..", "2x"})
    CHECK_THROWS_AS(parse_range(bad), std::invalid_argument);
}

TEST_CASE("property: aggregates are recomputable from rows") {
  std::mt19937_64 rng(111);
  for (int c = 0; c < 250; ++c) {
    CAPTURE(c);
    std::vector<EvalRow> rows;
    const size_t n_rows = 1 + pick(rng, 40);
    for (size_t i = 0; i < n_rows; ++i) {
      EvalRow r;
      r.strategy = coin(rng) ? "bison" : "det_plan";
      r.env = "blocks";
      r.n = static_cast<int>(1 + pick(rng, 3));
      r.episode = i;
      r.seed = pick(rng, 4);
      r.result.success = coin(rng, 0.6);
      rows.push_back(r);
    }
    // oracle: per-seed rates, then mean and population std
    std::map<std::string, std::map<uint64_t, std::pair<double, double>>> acc;
    for (const auto& r : rows) {
      auto& a = acc[r.strategy][r.seed];
      a.first += r.result.success;
      a.second += 1;
    }
    auto ag = aggregate(rows);
    CHECK(ag.size() == acc.size());
    CHECK(ag[0].strategy == rows[0].strategy);
    for (const auto& a : ag) {
      const auto& per = acc.at(a.strategy);
      double mean = 0, var = 0;
      for (const auto& [s, v] : per) mean += v.first / v.second;
      mean /= per.size();
      for (const auto& [s, v] : per) var += std::pow(v.first / v.second - mean, 2);
      CHECK(a.seeds == per.size());
      CHECK(a.mean == doctest::Approx(mean).epsilon(1e-12));
      CHECK(a.std == doctest::Approx(std::sqrt(var / per.size())).epsilon(1e-12));
    }
  }
  CHECK(aggregate({}).empty());
}
