#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bison/bilevel.hpp"
#include "bison/core.hpp"

namespace bison {

// HL Blocks instance: n blocks and n+1 pads, all clear, gripper free; the
// goal puts each block on a distinct pad (seeded random assignment).
HLProblem blocks_hl_instance(size_t n, uint64_t seed);

struct EvalRow {
  std::string strategy;
  std::string env;
  int n = 0;
  size_t episode = 0;
  EpisodeResult result;
  uint64_t seed = 0;
};

inline constexpr const char* kEvalHeader =
    "strategy,env,n,episode,success,steps,replans,wall_time,seed";

// wall_time is written as 0 when `timing` is false.
std::string eval_csv_row(const EvalRow& r, bool timing = true);

struct Aggregate {
  std::string strategy;
  std::string env;
  size_t seeds = 0;
  double mean = 0;  // mean over seeds of the per-seed success rate
  double std = 0;   // population std over seeds
};

// Groups rows by (strategy, env) in first-appearance order.
std::vector<Aggregate> aggregate(const std::vector<EvalRow>& rows);

inline constexpr const char* kAggregateHeader = "strategy,env,seeds,mean_success,std_success";
std::string aggregate_csv_row(const Aggregate& a);

// Parses "a..b" or a single integer; throws std::invalid_argument.
std::pair<int, int> parse_range(const std::string& s);

}  // namespace bison
