#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bison/core.hpp"
#include "bison/learner.hpp"
#include "bison/ll.hpp"

namespace bison {

struct GnnDims {
  size_t global = 0;  // n_ego + 2|P|
  size_t action = 0;  // |A|
  size_t object = 0;  // m_obj + 2|P| + M
  size_t hidden = 64;
  size_t layers = 2;
  size_t out = 3;

  bool operator==(const GnnDims&) const = default;
};

GnnDims gnn_dims(const Domain& d, size_t n_ego, size_t n_obj_features, size_t n_out,
                 size_t hidden = 64, size_t layers = 2);

// Offsets of each weight block inside GnnParams::w (all row-major).
struct GnnLayout {
  size_t wg0, wa0, wo0;
  std::vector<size_t> wg, wa, wo;
  size_t r1, b1, r2, b2;
  size_t total;
};

GnnLayout gnn_layout(const GnnDims& d);

inline constexpr size_t kGnnParamLimit = 33000;

struct GnnParams {
  GnnDims dims;
  uint64_t seed = 0;
  bool zero_action = false;  // PureNN-style ablation stub
  std::string domain;
  std::vector<double> w;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init. Throws std::length_error
  // if H=64, L=2 yields kGnnParamLimit parameters or more.
  static GnnParams init(const GnnDims& dims, uint64_t seed);

  size_t count() const { return w.size(); }
  bool operator==(const GnnParams&) const = default;
};

struct GnnInput {
  std::vector<double> global;
  std::vector<double> action;
  std::vector<std::vector<double>> objects;  // HL action arguments; all objects for the stub
};

// Throws std::out_of_range if the action names an object missing from lls.
GnnInput encode(const Domain& d, const LLState& lls, const GroundAction& hla,
                const FactSet& goal, const HLState& hls, bool zero_action = false);

LLAction forward(const GnnParams& p, const GnnInput& x);

// ReLU masks and argmax choices of the forward pass. Two inputs/params with
// equal patterns lie in the same linear piece.
std::vector<int32_t> activation_pattern(const GnnParams& p, const GnnInput& x);

// Adds d(loss)/dw into grad (size p.count()); returns the loss, the mean of
// squared errors over the output dims.
double backward(const GnnParams& p, const GnnInput& x, const LLAction& target,
                std::vector<double>& grad);

struct TrainConfig {
  size_t iterations = 200;  // passes over the shuffled dataset
  double lr = 1e-3;
  size_t batch = 128;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  size_t hidden = 64;
  size_t layers = 2;
  uint64_t seed = 0;
  bool zero_action = false;

  void validate() const;  // throws std::invalid_argument
};

// lr at step t of T (t = T gives 0).
double cosine_lr(size_t t, size_t T, double lr0);

struct Sample {
  GnnInput x;
  LLAction y;
};

std::vector<Sample> build_dataset(const std::vector<Demo>& demos, const Domain& d,
                                  const Labelling& label, bool zero_action = false);

struct TrainStats {
  size_t samples = 0;
  std::vector<double> loss;  // mean sample loss per pass, taken during the updates
};

GnnParams train(const std::vector<Demo>& demos, const Domain& d,
                const Labelling& label, const TrainConfig& cfg,
                TrainStats* stats = nullptr);

// Trains on a prepared dataset; dims must match its encodings.
GnnParams train_on(const std::vector<Sample>& data, const GnnDims& dims,
                   const TrainConfig& cfg, TrainStats* stats = nullptr);

double dataset_mse(const GnnParams& p, const std::vector<Sample>& data);

std::string serialize_params(const GnnParams& p);
GnnParams parse_params(const std::string& bytes);  // throws std::runtime_error
void save_params(const std::string& path, const GnnParams& p);
GnnParams load_params(const std::string& path);

}  // namespace bison
