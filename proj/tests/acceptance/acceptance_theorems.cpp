// Theorem gate: the sandwich bound on random sincos units, the bias
// counterexamples, the linear-product/rescaling statements, and the
// random-phase second-moment identity. Budget: < 5 min.

#include <cmath>
#include <vector>

#include "lipnn/network.hpp"
#include "lipnn/rng.hpp"
#include "lipnn/verification.hpp"
#include "harness.hpp"

using namespace lipnn;
using acceptance::check;
using acceptance::fmt;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

Matrix random_orthogonal(std::size_t n, Rng& rng) {
  Matrix a = random_matrix(n, n, rng);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += a(i, j) * a(i, k);
      for (std::size_t i = 0; i < n; ++i) a(i, j) -= d * a(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) a(i, j) /= norm;
  }
  return a;
}

Dataset synthetic_inputs(std::size_t n, std::size_t dims, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features = random_matrix(n, dims, rng, scale);
  ds.labels.assign(n, 0);
  ds.class_count = 1;
  ds.split = "train";
  return ds;
}

Network sincos_unit(const Matrix& w, const Matrix& a, const Matrix& b) {
  Network net;
  net.input_dim = w.cols();
  LayerSpec hidden;
  hidden.weight = w;
  hidden.activation = Polyactivation::by_id("sincos");
  net.layers.push_back(std::move(hidden));
  LayerSpec readout;
  readout.weight = Matrix(a.rows(), 2 * a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      readout.weight(i, j) = a(i, j);
      readout.weight(i, a.cols() + j) = b(i, j);
    }
  net.layers.push_back(std::move(readout));
  validate_network(net);
  return net;
}

void criterion_sandwich() {
  Rng rng(404);
  std::size_t violations = 0;
  double worst_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(15);  // up to 16
    const std::size_t m = 1 + rng.below(5);
    const Matrix w = random_matrix(n, n, rng);
    const Matrix a = random_matrix(m, n, rng), b = random_matrix(m, n, rng);
    const Network net = sincos_unit(w, a, b);
    const double k = trivial_bound(net, Norm::L2);
    const double floor = k / (std::sqrt(2.0) * condition_number(w));
    const Dataset ds = synthetic_inputs(24, n, 2.0, 9000 + trial);
    const double lhat = empirical_lower_bound(net, ds, 20, 11).value;
    if (!(floor <= lhat + 1e-6 && lhat <= k * (1.0 + 1e-6))) {
      ++violations;
      worst_gap = std::max(worst_gap, std::max(floor - lhat, lhat - k));
    }
  }
  check(violations == 0,
        "criterion 4a: K/(sqrt2 kappa) <= L_hat <= K on 100 random sincos units",
        fmt("%zu violations beyond 1e-6 slack (worst gap %.3g)", violations, worst_gap));
}

void criterion_counterexamples() {
  // ReLU: trivial bound d, true constant 1 under the loose biases.
  const Counterexample relu = counterexample_relu(25);
  const double relu_k = trivial_bound(relu.loose, Norm::L2);
  check(std::fabs(relu_k - 25.0) <= 1e-9 * 25.0,
        "criterion 4b: relu counterexample trivial bound equals d",
        fmt("K = %.12g (d = 25)", relu_k));
  const Dataset line = synthetic_inputs(30, 1, 10.0, 51);
  const double relu_lhat = empirical_lower_bound(relu.loose, line, 20, 7).value;
  check(std::fabs(relu_lhat - 1.0) <= 1e-4,
        "criterion 4b: relu counterexample secant search finds the true constant 1",
        fmt("L_hat = %.8f (want 1 +- 1e-4)", relu_lhat));

  // sin: the absorbed loose fixture is the constant zero function.
  const Counterexample sin_fix = counterexample_sin(10);
  const double sin_k = trivial_bound(sin_fix.loose, Norm::L2);
  const double sin_lhat = empirical_lower_bound(sin_fix.loose, line, 20, 7).value;
  check(std::fabs(sin_k - 20.0) <= 1e-9 * 20.0 && sin_lhat <= 1e-6,
        "criterion 4b: sin counterexample is constant with bound 2d",
        fmt("K = %.10g, L_hat = %.3g (want 20, <= 1e-6)", sin_k, sin_lhat));
}

void criterion_linear_product() {
  Rng rng(4242);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    const Matrix q1 = random_orthogonal(n, rng), q2 = random_orthogonal(n, rng);
    const double c = rng.uniform(0.3, 3.0);
    Network lin;
    lin.input_dim = n;
    LayerSpec f0, f1, f2;
    f0.weight = q1 * c;
    f1.weight = q2 * (1.0 / c);
    f2.weight = matmul(q2, q1).transposed();
    lin.layers.push_back(std::move(f0));
    lin.layers.push_back(std::move(f1));
    lin.layers.push_back(std::move(f2));
    validate_network(lin);
    worst = std::max(worst, std::fabs(trivial_bound(lin, Norm::L2) - 1.0));
  }
  check(worst <= 1e-10, "criterion 4c: orthogonal factorizations of I give K = 1",
        fmt("20 trials, worst |K - 1| = %.3g (tol 1e-10)", worst));

  // Rescaling a ReLU pair inflates the bound without changing the function.
  const Network base = kaiming_init({4, 8, 6, 3}, "relu", 99, true);
  const Network scaled = relu_rescale(base, 0, 1000.0);
  const double k_base = trivial_bound(base, Norm::L2);
  const double k_scaled = trivial_bound(scaled, Norm::L2);
  Rng xrng(17);
  double worst_forward = 0.0;
  for (int t = 0; t < 200; ++t) {
    Vec x(4);
    for (double& v : x) v = xrng.normal();
    const Vec f0 = forward(base, x), f1 = forward(scaled, x);
    for (std::size_t i = 0; i < f0.size(); ++i)
      worst_forward = std::max(worst_forward,
                               std::fabs(f0[i] - f1[i]) / std::max(1.0, std::fabs(f0[i])));
  }
  check(k_scaled >= 100.0 * k_base && worst_forward <= 1e-9,
        "criterion 4c: relu_rescale(1e3) inflates K >= 100x, forward unchanged",
        fmt("K %.4g -> %.4g (x%.1f), worst forward dev %.3g", k_base, k_scaled,
            k_scaled / k_base, worst_forward));
}

void criterion_random_phase() {
  // Sample mean of Df Df^T against alpha^L I, entrywise within 5 standard
  // errors, for the bias-free recursion applied directly to the input.
  const std::size_t d0 = 5;
  Rng xrng(31);
  Vec x(d0);
  for (double& v : x) v = xrng.normal();

  for (const double alpha : {1.0, std::sqrt(0.5)}) {
    for (std::size_t depth : {1u, 2u, 3u}) {
      std::vector<std::size_t> dims(depth + 1, 8);
      dims[0] = d0;
      dims[depth] = d0;  // square output so the identity target is d0 x d0
      const int draws = 4000;
      Matrix mean(d0, d0), m2(d0, d0);
      for (int s = 0; s < draws; ++s) {
        const Network net =
            random_phase_stack(dims, alpha, 10007 * depth + static_cast<std::uint64_t>(s));
        const Matrix j = jacobian(net, x);
        const Matrix q = matmul_transB(j, j);
        for (std::size_t i = 0; i < q.data().size(); ++i) {
          mean.data()[i] += q.data()[i];
          m2.data()[i] += q.data()[i] * q.data()[i];
        }
      }
      double worst_sigmas = 0.0;
      const double target = std::pow(alpha, static_cast<double>(depth));
      for (std::size_t i = 0; i < d0; ++i)
        for (std::size_t j = 0; j < d0; ++j) {
          const double mu = mean(i, j) / draws;
          const double var = std::max(m2(i, j) / draws - mu * mu, 1e-300);
          const double se = std::sqrt(var / draws);
          const double want = (i == j) ? target : 0.0;
          worst_sigmas = std::max(worst_sigmas, std::fabs(mu - want) / se);
        }
      check(worst_sigmas <= 5.0,
            fmt("criterion 4d: E[Df Df^T] = alpha^L I at alpha=%.4g, L=%zu", alpha, depth),
            fmt("4000 draws, worst entry deviation %.2f standard errors (tol 5)", worst_sigmas));
    }
  }
}

}  // namespace

int main() {
  criterion_sandwich();
  criterion_counterexamples();
  criterion_linear_product();
  criterion_random_phase();
  return acceptance::finish("theorems");
}
