#include "bison/bench.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "bison/envs.hpp"
#include "bison/io.hpp"

namespace bison {

HLProblem blocks_hl_instance(size_t n, uint64_t seed) {
  const Domain& d = env_domain(EnvKind::blocks);
  const int at = d.predicate_index("at"), clear = d.predicate_index("clear"),
            free = d.predicate_index("gripperFree");
  HLProblem p;
  for (size_t i = 0; i < n; ++i) p.objects.push_back("b" + std::to_string(i));
  for (size_t i = 0; i <= n; ++i) p.objects.push_back("p" + std::to_string(i));
  const auto N = static_cast<int32_t>(n);
  for (int32_t o = 0; o < static_cast<int32_t>(p.objects.size()); ++o)
    p.init.insert(Fact(clear, {o}));
  p.init.insert(Fact(free, {}));
  std::vector<int32_t> pads(n + 1);
  for (size_t i = 0; i <= n; ++i) pads[i] = N + static_cast<int32_t>(i);
  std::mt19937_64 rng(seed);
  for (size_t i = pads.size(); i > 1; --i) std::swap(pads[i - 1], pads[uniform_index(rng, i)]);
  for (int32_t b = 0; b < N; ++b) p.goal.push_back(Fact(at, {b, pads[b]}));
  p.goal = normalize(std::move(p.goal));
  return p;
}

std::string eval_csv_row(const EvalRow& r, bool timing) {
  return r.strategy + "," + r.env + "," + std::to_string(r.n) + "," +
         std::to_string(r.episode) + "," + (r.result.success ? "1" : "0") + "," +
         std::to_string(r.result.ll_steps) + "," + std::to_string(r.result.replans) + "," +
         format_double(timing ? r.result.wall_time : 0.0) + "," + std::to_string(r.seed);
}

std::vector<Aggregate> aggregate(const std::vector<EvalRow>& rows) {
  struct Acc {
    std::map<uint64_t, std::pair<size_t, size_t>> per_seed;  // seed -> (succ, total)
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& r : rows) {
    auto key = std::pair{r.strategy, r.env};
    if (!acc.count(key)) order.push_back(key);
    auto& ps = acc[key].per_seed[r.seed];
    ps.first += r.result.success;
    ++ps.second;
  }
  std::vector<Aggregate> out;
  for (const auto& key : order) {
    const auto& ps = acc[key].per_seed;
    Aggregate a{key.first, key.second, ps.size(), 0, 0};
    std::vector<double> rates;
    for (const auto& [s, v] : ps) rates.push_back(static_cast<double>(v.first) / v.second);
    for (double x : rates) a.mean += x;
    a.mean /= static_cast<double>(rates.size());
    for (double x : rates) a.std += (x - a.mean) * (x - a.mean);
    a.std = std::sqrt(a.std / static_cast<double>(rates.size()));
    out.push_back(a);
  }
  return out;
}

std::string aggregate_csv_row(const Aggregate& a) {
  return a.strategy + "," + a.env + "," + std::to_string(a.seeds) + "," +
         format_double(a.mean) + "," + format_double(a.std);
}

std::pair<int, int> parse_range(const std::string& s) {
  auto num = [&](const std::string& t) {
    size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(t, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != t.size() || v < 1)
      throw std::invalid_argument("bad object range '" + s + "'");
    return v;
  };
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int v = num(s);
    return {v, v};
  }
  const int a = num(s.substr(0, dots)), b = num(s.substr(dots + 2));
  if (a > b) throw std::invalid_argument("bad object range '" + s + "'");
  return {a, b};
}

}  // namespace bison
