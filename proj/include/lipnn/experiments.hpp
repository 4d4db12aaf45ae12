#ifndef LIPNN_EXPERIMENTS_HPP
#define LIPNN_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lipnn/data.hpp"
#include "lipnn/network.hpp"
#include "lipnn/training.hpp"

namespace lipnn {

// One training run: architecture + initialization + objective. The same
// struct drives the CLI presets and the acceptance suites.
struct RunSpec {
  std::vector<std::size_t> hidden = {4};
  std::string activation = "sincos";
  Norm norm_p = Norm::L2;
  PenaltySpec penalty;
  TrainConfig train_config;
  double init_alpha = 0.70710678118654752;  // 2^{-1/2}, the stable worst-case scale

  // Direct norm-ball parameterization: every weight is built from (X, Y)
  // via w23_parameterize and the composed map is scaled to `w23_bound`.
  bool w23 = false;
  double w23_bound = 0.1;
};

struct RunResult {
  Network net;
  TrainHistory history;
  EvalMetrics final_train;
  EvalMetrics final_test;
  bool w23_normalization_applied = false;  // a produced layer exceeded the unit ball
};

Network build_initial_network(const RunSpec& spec, std::size_t input_dim, std::size_t classes,
                              std::uint64_t seed);

RunResult run_training(const RunSpec& spec, const Dataset& train_data, const Dataset& test_data,
                       std::uint64_t seed);

}  // namespace lipnn

#endif  // LIPNN_EXPERIMENTS_HPP
