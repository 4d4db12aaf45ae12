#include "lipnn/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lipnn/rng.hpp"

namespace lipnn {

namespace optim {

LbfgsResult lbfgs_minimize(const std::function<double(const Vec&, Vec&)>& fg, Vec x0,
                           const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);

  Vec grad(n), grad_new(n), x_new(n), direction(n);
  double fx = fg(result.x, grad);

  std::vector<Vec> s_hist, y_hist;
  std::vector<double> rho_hist;
  Vec alpha_buf;

  auto phi = [&](double t, const Vec& x, const Vec& d, Vec& xt, Vec& gt) {
    for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + t * d[i];
    return fg(xt, gt);
  };

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const double gnorm = vec_norm(grad, Norm::L2);
    if (gnorm <= options.grad_tolerance * std::max(1.0, vec_norm(result.x, Norm::L2))) break;

    // Two-loop recursion.
    direction = grad;
    const std::size_t m = s_hist.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho_hist[k] * dot(s_hist[k], direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha_buf[k] * y_hist[k][i];
    }
    if (m > 0) {
      const double gamma = dot(s_hist[m - 1], y_hist[m - 1]) / dot(y_hist[m - 1], y_hist[m - 1]);
      for (double& d : direction) d *= gamma;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] += (alpha_buf[k] - beta) * s_hist[k][i];
    }
    for (double& d : direction) d = -d;

    double dg = dot(grad, direction);
    if (dg >= 0.0) {  // not a descent direction; fall back to steepest descent
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      dg = -gnorm * gnorm;
      if (dg == 0.0) break;
    }

    // Strong Wolfe line search (bracket + zoom).
    const double f0 = fx;
    const double dg0 = dg;
    double t_prev = 0.0, f_prev = f0;
    double t = 1.0;
    double t_lo = 0.0, t_hi = 0.0, f_lo = f0;
    bool bracketed = false, ok = false;
    double ft = f0, dgt = dg0;
    for (std::size_t ls = 0; ls < options.max_line_search; ++ls) {
      ft = phi(t, result.x, direction, x_new, grad_new);
      dgt = dot(grad_new, direction);
      if (ft > f0 + options.c1 * t * dg0 || (ls > 0 && ft >= f_prev)) {
        t_lo = t_prev;
        f_lo = f_prev;
        t_hi = t;
        bracketed = true;
        break;
      }
      if (std::fabs(dgt) <= -options.c2 * dg0) {
        ok = true;
        break;
      }
      if (dgt >= 0.0) {
        t_lo = t;
        f_lo = ft;
        t_hi = t_prev;
        bracketed = true;
        break;
      }
      t_prev = t;
      f_prev = ft;
      t *= 2.0;
    }
    if (bracketed) {
      for (std::size_t z = 0; z < options.max_line_search; ++z) {
        t = 0.5 * (t_lo + t_hi);
        ft = phi(t, result.x, direction, x_new, grad_new);
        dgt = dot(grad_new, direction);
        if (ft > f0 + options.c1 * t * dg0 || ft >= f_lo) {
          t_hi = t;
        } else {
          if (std::fabs(dgt) <= -options.c2 * dg0) {
            ok = true;
            break;
          }
          if (dgt * (t_hi - t_lo) >= 0.0) t_hi = t_lo;
          t_lo = t;
          f_lo = ft;
        }
        if (std::fabs(t_hi - t_lo) < 1e-16 * std::max(1.0, std::fabs(t_lo))) break;
      }
    }
    if (!ok && !(ft < f0)) {
      if (iter == 0) result.first_line_search_failed = true;
      break;  // no progress possible along this direction
    }

    // Accept the step.
    Vec s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = t * direction[i];
      y[i] = grad_new[i] - grad[i];
    }
    result.x = x_new;
    fx = ft;
    grad = grad_new;
    result.iterations = iter + 1;

    const double sy = dot(s, y);
    if (sy > 1e-12 * vec_norm(s, Norm::L2) * vec_norm(y, Norm::L2)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > options.memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
  }
  result.fx = fx;
  return result;
}

}  // namespace optim

namespace {

// Diag(W W^T) as a vector: squared 2-norms of the rows of W.
Vec row_sq_norms(const Matrix& w) {
  Vec d(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) d[i] += row[j] * row[j];
  }
  return d;
}

// A Diag A^T given the diagonal as a vector.
Matrix sandwich_diag(const Matrix& a, const Vec& d) {
  Matrix out(a.rows(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * d[k] * a(j, k);
      out(i, j) = s;
    }
  return out;
}

void require_full_rank(const Matrix& w) {
  const SvdResult svd = full_svd(w);
  const double smax = svd.singular_values.front();
  const double threshold = smax * 1e-12 * static_cast<double>(std::max(w.rows(), w.cols()));
  for (double s : svd.singular_values)
    if (s <= threshold) throw std::invalid_argument("W is rank deficient; lower bound omitted");
}

double lambda_max_symmetric(const Matrix& s) { return full_svd(s).singular_values.front(); }

// Subgradient of || . ||_p at u (lowest-index tie break for p = inf).
Vec norm_subgradient(const Vec& u, Norm p) {
  Vec g(u.size(), 0.0);
  switch (p) {
    case Norm::L2: {
      const double n = vec_norm(u, Norm::L2);
      if (n > 0.0)
        for (std::size_t i = 0; i < u.size(); ++i) g[i] = u[i] / n;
      break;
    }
    case Norm::L1:
      for (std::size_t i = 0; i < u.size(); ++i) g[i] = u[i] > 0.0 ? 1.0 : (u[i] < 0.0 ? -1.0 : 0.0);
      break;
    case Norm::LInf: {
      std::size_t k = 0;
      for (std::size_t i = 1; i < u.size(); ++i)
        if (std::fabs(u[i]) > std::fabs(u[k])) k = i;
      g[k] = u[k] > 0.0 ? 1.0 : (u[k] < 0.0 ? -1.0 : 0.0);
      break;
    }
  }
  return g;
}

}  // namespace

double theory_lower_sincos(const Matrix& a, const Matrix& b, const Matrix& w) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("A and B must have the same shape");
  if (a.cols() != w.rows()) throw std::invalid_argument("A cols must match W rows");
  require_full_rank(w);
  const Vec d = row_sq_norms(w);
  const Matrix s = sandwich_diag(a, d) + sandwich_diag(b, d);
  return std::sqrt(0.5 * lambda_max_symmetric(s));
}

double theory_lower_abs(const Matrix& a, const Matrix& w) {
  if (a.cols() != w.rows()) throw std::invalid_argument("A cols must match W rows");
  require_full_rank(w);
  return std::sqrt(lambda_max_symmetric(sandwich_diag(a, row_sq_norms(w))));
}

EmpiricalLowerBound empirical_lowerbound_impl(const Network& net, const Dataset& data,
                                              std::size_t restarts, std::uint64_t seed) {
  const std::size_t n = net.input_dim;
  const Norm p = net.norm_p;
  const double eps = 1e-8;

  // Negated secant slope over the concatenated pair (x, y).
  auto objective = [&](const Vec& xy, Vec& grad) {
    Vec x(xy.begin(), xy.begin() + static_cast<std::ptrdiff_t>(n));
    Vec y(xy.begin() + static_cast<std::ptrdiff_t>(n), xy.end());
    const ForwardTrace tx = forward_trace(net, x);
    const ForwardTrace ty = forward_trace(net, y);
    Vec diff(tx.logits.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = tx.logits[i] - ty.logits[i];
    Vec dxy(n);
    for (std::size_t i = 0; i < n; ++i) dxy[i] = x[i] - y[i];

    const double num = vec_norm(diff, p);
    const double den = vec_norm(dxy, p) + eps;
    const double slope = num / den;

    const Vec u = norm_subgradient(diff, p);
    const Vec gx_num = input_gradient(net, tx, u);
    const Vec gy_num = input_gradient(net, ty, u);
    const Vec du = norm_subgradient(dxy, p);

    grad.assign(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double dnum_dx = gx_num[i];
      const double dnum_dy = -gy_num[i];
      const double dden_dx = du[i];
      const double dden_dy = -du[i];
      grad[i] = -(dnum_dx * den - num * dden_dx) / (den * den);
      grad[n + i] = -(dnum_dy * den - num * dden_dy) / (den * den);
    }
    return -slope;
  };

  Rng pair_rng = Rng(seed).fork(0x5eca);
  optim::LbfgsOptions opts;
  opts.memory = 10;
  opts.max_iterations = 500;

  EmpiricalLowerBound best;
  best.value = -1.0;
  for (std::size_t r = 0; r < restarts; ++r) {
    std::size_t i = pair_rng.below(data.size());
    std::size_t j = pair_rng.below(data.size());
    if (i == j) j = (j + 1) % data.size();
    Vec start(2 * n);
    std::copy(data.features.row(i), data.features.row(i) + n, start.begin());
    std::copy(data.features.row(j), data.features.row(j) + n,
              start.begin() + static_cast<std::ptrdiff_t>(n));

    const optim::LbfgsResult res = optim::lbfgs_minimize(objective, std::move(start), opts);
    const double value = -res.fx;
    if (value > best.value) {
      best.value = value;
      best.witness.x.assign(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(n));
      best.witness.y.assign(res.x.begin() + static_cast<std::ptrdiff_t>(n), res.x.end());
    }
  }
  if (best.value < 0.0) best.value = 0.0;
  return best;
}

EmpiricalLowerBound empirical_lower_bound(const Network& net, const Dataset& data,
                                          std::size_t restarts, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("empirical_lower_bound: empty dataset");
  EmpiricalLowerBound best = empirical_lowerbound_impl(net, data, restarts, seed);
  const double k = trivial_bound(net, net.norm_p);
  if (best.value > k * (1.0 + 1e-6))
    throw std::logic_error("empirical lower bound exceeds the trivial bound");
  return best;
}

std::vector<SpectrumEntry> spectrum_histogram(const Network& net, Norm p) {
  std::vector<SpectrumEntry> out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Matrix& w = net.layers[l].weight;
    Vec values;
    switch (p) {
      case Norm::L2:
        values = full_svd(w).singular_values;
        break;
      case Norm::LInf:
        values.resize(w.rows());
        for (std::size_t i = 0; i < w.rows(); ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < w.cols(); ++j) s += std::fabs(w(i, j));
          values[i] = s;
        }
        break;
      case Norm::L1:
        values.resize(w.cols());
        for (std::size_t j = 0; j < w.cols(); ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < w.rows(); ++i) s += std::fabs(w(i, j));
          values[j] = s;
        }
        break;
    }
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, v);
    for (double v : values) out.push_back({l, vmax > 0.0 ? v / vmax : 0.0});
  }
  return out;
}

std::string spectrum_to_csv(const std::vector<SpectrumEntry>& spectrum) {
  std::ostringstream os;
  os << "matrix_index,value\n";
  char buf[64];
  for (const SpectrumEntry& e : spectrum) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e.matrix_index, e.value);
    os << buf;
  }
  return os.str();
}

namespace {

// For a single-hidden-layer network, try the matching closed-form bound.
std::optional<double> try_theory_lower(const Network& net) {
  if (net.layers.size() != 2 || net.norm_p != Norm::L2) return std::nullopt;
  const LayerSpec& hidden = net.layers[0];
  const LayerSpec& readout = net.layers[1];
  if (!hidden.activation || hidden.bias) return std::nullopt;
  try {
    if (hidden.activation->kind() == Polyactivation::Id::SinCos) {
      const std::size_t h = hidden.weight.rows();
      Matrix a(readout.weight.rows(), h), b(readout.weight.rows(), h);
      for (std::size_t i = 0; i < readout.weight.rows(); ++i)
        for (std::size_t j = 0; j < h; ++j) {
          a(i, j) = readout.weight(i, j);
          b(i, j) = readout.weight(i, h + j);
        }
      return theory_lower_sincos(a, b, hidden.weight);
    }
    if (hidden.activation->kind() == Polyactivation::Id::Abs)
      return theory_lower_abs(readout.weight, hidden.weight);
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // rank-deficient W: bound omitted, flagged by absence
  }
  return std::nullopt;
}

}  // namespace

VerificationReport verify(const Network& net, const Dataset& data, std::size_t restarts,
                          std::uint64_t seed) {
  VerificationReport report;
  report.norm_p = net.norm_p;
  report.restarts = restarts;
  report.seed = seed;
  report.k_upper = trivial_bound(net, net.norm_p);
  report.theory_lower = try_theory_lower(net);
  EmpiricalLowerBound lower = empirical_lower_bound(net, data, restarts, seed);
  report.empirical_lower = lower.value;
  report.witness = std::move(lower.witness);
  report.tightness = report.empirical_lower > 0.0 ? report.k_upper / report.empirical_lower
                                                  : std::numeric_limits<double>::infinity();
  for (const LayerSpec& layer : net.layers) {
    report.per_layer_norms.push_back(induced_norm(layer.weight, net.norm_p));
    report.per_layer_condition_numbers.push_back(condition_number(layer.weight));
  }
  report.spectrum = spectrum_histogram(net, net.norm_p);
  return report;
}

std::string VerificationReport::to_json() const {
  std::ostringstream os;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto arr = [&](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += num(v[i]);
    }
    return s + "]";
  };
  os << "{\n";
  os << "  \"K_upper\": " << num(k_upper) << ",\n";
  os << "  \"theory_lower\": " << (theory_lower ? num(*theory_lower) : "null") << ",\n";
  os << "  \"empirical_lower\": " << num(empirical_lower) << ",\n";
  os << "  \"tightness\": " << num(tightness) << ",\n";
  os << "  \"norm_p\": \"" << to_string(norm_p) << "\",\n";
  os << "  \"per_layer_norms\": " << arr(per_layer_norms) << ",\n";
  os << "  \"per_layer_condition_numbers\": " << arr(per_layer_condition_numbers) << ",\n";
  os << "  \"witness_x\": " << arr(witness.x) << ",\n";
  os << "  \"witness_y\": " << arr(witness.y) << ",\n";
  os << "  \"search\": {\"restarts\": " << restarts << ", \"lbfgs_memory\": " << lbfgs_memory
     << ", \"lbfgs_max_iterations\": " << lbfgs_max_iterations << ", \"line_search\": \""
     << line_search << "\", \"secant_epsilon\": " << num(secant_epsilon) << ", \"seed\": " << seed
     << "},\n";
  os << "  \"spectrum\": [";
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (i) os << ",";
    os << "[" << spectrum[i].matrix_index << "," << num(spectrum[i].value) << "]";
  }
  os << "]\n}\n";
  return os.str();
}

}  // namespace lipnn
