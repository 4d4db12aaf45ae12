#ifndef LIPNN_VERIFICATION_HPP
#define LIPNN_VERIFICATION_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipnn/data.hpp"
#include "lipnn/network.hpp"

namespace lipnn {

// Guaranteed Lipschitz lower bound for a single sincos LASL unit
// f(x) = A cos(Wx) + B sin(Wx):
//   sqrt( (1/2) lambda_max[ A Diag(WW^T) A^T + B Diag(WW^T) B^T ] ).
// Throws std::invalid_argument when W is rank deficient.
double theory_lower_sincos(const Matrix& a, const Matrix& b, const Matrix& w);

// Lower bound for f(x) = A abs(Wx). Returns the factor-free value
// sqrt( lambda_max[ A Diag(WW^T) A^T ] ) from the proof's final display;
// only the (weaker) half-weakened statement is ever asserted against it.
double theory_lower_abs(const Matrix& a, const Matrix& w);

struct SecantWitness {
  Vec x;
  Vec y;
};

struct EmpiricalLowerBound {
  double value = 0.0;
  SecantWitness witness;
};

// Best secant slope ||f(x)-f(y)||_p / (||x-y||_p + 1e-8) found by L-BFGS
// (memory 10, up to 500 iterations, strong Wolfe) over `restarts` starts at
// random training-data pairs. The norm is the network's norm_p. A restart
// whose first line search fails counts as converged at its start point.
EmpiricalLowerBound empirical_lower_bound(const Network& net, const Dataset& data,
                                          std::size_t restarts = 20, std::uint64_t seed = 0);

// Normalized per-matrix statistic: p=2 singular values / sigma_max,
// p=inf row 1-norms / max, p=1 column 1-norms / max.
struct SpectrumEntry {
  std::size_t matrix_index;
  double value;
};
std::vector<SpectrumEntry> spectrum_histogram(const Network& net, Norm p);
std::string spectrum_to_csv(const std::vector<SpectrumEntry>& spectrum);

struct VerificationReport {
  double k_upper = 0.0;
  std::optional<double> theory_lower;
  double empirical_lower = 0.0;
  double tightness = 0.0;  // k_upper / empirical_lower
  Norm norm_p = Norm::L2;
  std::vector<double> per_layer_norms;
  std::vector<double> per_layer_condition_numbers;
  std::vector<SpectrumEntry> spectrum;
  SecantWitness witness;
  // search metadata (the paper leaves these open; recorded for reproducibility)
  std::size_t restarts = 20;
  std::size_t lbfgs_memory = 10;
  std::size_t lbfgs_max_iterations = 500;
  std::string line_search = "strong-wolfe";
  double secant_epsilon = 1e-8;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

// Upper bound, lower bounds (theoretical one only for single-hidden-layer
// sincos/abs networks with full-rank W), tightness, and spectrum
// diagnostics in one report.
VerificationReport verify(const Network& net, const Dataset& data, std::size_t restarts = 20,
                          std::uint64_t seed = 0);

namespace optim {

struct LbfgsOptions {
  std::size_t memory = 10;
  std::size_t max_iterations = 500;
  double grad_tolerance = 1e-10;
  double c1 = 1e-4;  // sufficient decrease
  double c2 = 0.9;   // curvature
  std::size_t max_line_search = 40;
};

struct LbfgsResult {
  Vec x;
  double fx = 0.0;
  std::size_t iterations = 0;
  bool first_line_search_failed = false;
};

// Minimize f via L-BFGS two-loop recursion with a strong-Wolfe line search.
// The callback evaluates f and writes the gradient.
LbfgsResult lbfgs_minimize(const std::function<double(const Vec&, Vec&)>& fg, Vec x0,
                           const LbfgsOptions& options = {});

}  // namespace optim

}  // namespace lipnn

#endif  // LIPNN_VERIFICATION_HPP
