#include "lipnn/activations.hpp"

#include <cmath>
#include <stdexcept>

#include "lipnn/rng.hpp"

namespace lipnn {

namespace {

// log(cosh x) rewritten so it cannot overflow for |x| > 710.
double log_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094;
}

double sech(double x) { return 1.0 / std::cosh(x); }

// Zero-at-the-kink derivative conventions.
double d_abs(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
double d_relu(double x) { return x > 0.0 ? 1.0 : 0.0; }

// Induced 1-norm Lipschitz constant of tanh3:
// max over x of sech^2 x + |sech x tanh x| + |tanh x|, attained at the
// positive root of 8t^3 - 4t^2 - 7t + 4 with t = tanh x.
constexpr double kTanh3Lip1 = 1.7223579958491680;

constexpr double kSqrt2 = 1.4142135623730951;

}  // namespace

Polyactivation Polyactivation::by_id(const std::string& id) {
  if (id == "sincos") return Polyactivation(Id::SinCos, id, 2);
  if (id == "abs") return Polyactivation(Id::Abs, id, 1);
  if (id == "crelu") return Polyactivation(Id::CRelu, id, 2);
  if (id == "id_abs") return Polyactivation(Id::IdAbs, id, 2);
  if (id == "tanh3") return Polyactivation(Id::Tanh3, id, 3);
  if (id == "tanh_pair") return Polyactivation(Id::TanhPair, id, 2);
  if (id == "relu") return Polyactivation(Id::Relu, id, 1);
  throw std::invalid_argument("unknown activation id: " + id);
}

const std::vector<std::string>& Polyactivation::registry_ids() {
  static const std::vector<std::string> ids = {"sincos", "abs",       "crelu", "id_abs",
                                               "tanh3",  "tanh_pair", "relu"};
  return ids;
}

void Polyactivation::apply(std::span<const double> x, Vec& out) const {
  const std::size_t d = x.size();
  out.resize(order_ * d);
  switch (kind_) {
    case Id::SinCos:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = std::cos(x[i]);
        out[d + i] = std::sin(x[i]);
      }
      break;
    case Id::Abs:
      for (std::size_t i = 0; i < d; ++i) out[i] = std::fabs(x[i]);
      break;
    case Id::CRelu:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = std::max(0.0, x[i]);
        out[d + i] = std::max(0.0, -x[i]);
      }
      break;
    case Id::IdAbs:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = x[i];
        out[d + i] = std::fabs(x[i]);
      }
      break;
    case Id::Tanh3:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = std::tanh(x[i]);
        out[d + i] = sech(x[i]);
        out[2 * d + i] = log_cosh(x[i]);
      }
      break;
    case Id::TanhPair:
      for (std::size_t i = 0; i < d; ++i) {
        const double t = std::tanh(x[i]);
        out[i] = t;
        out[d + i] = x[i] - t;
      }
      break;
    case Id::Relu:
      for (std::size_t i = 0; i < d; ++i) out[i] = std::max(0.0, x[i]);
      break;
  }
}

Vec Polyactivation::apply(const Vec& x) const {
  Vec out;
  apply(std::span<const double>(x.data(), x.size()), out);
  return out;
}

void Polyactivation::derivative_stack(std::span<const double> x, Vec& out) const {
  const std::size_t d = x.size();
  out.resize(order_ * d);
  switch (kind_) {
    case Id::SinCos:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = -std::sin(x[i]);
        out[d + i] = std::cos(x[i]);
      }
      break;
    case Id::Abs:
      for (std::size_t i = 0; i < d; ++i) out[i] = d_abs(x[i]);
      break;
    case Id::CRelu:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = d_relu(x[i]);
        out[d + i] = x[i] < 0.0 ? -1.0 : 0.0;
      }
      break;
    case Id::IdAbs:
      for (std::size_t i = 0; i < d; ++i) {
        out[i] = 1.0;
        out[d + i] = d_abs(x[i]);
      }
      break;
    case Id::Tanh3:
      for (std::size_t i = 0; i < d; ++i) {
        const double s = sech(x[i]);
        const double t = std::tanh(x[i]);
        out[i] = s * s;
        out[d + i] = -s * t;
        out[2 * d + i] = t;
      }
      break;
    case Id::TanhPair:
      for (std::size_t i = 0; i < d; ++i) {
        const double s = sech(x[i]);
        out[i] = s * s;
        out[d + i] = 1.0 - s * s;
      }
      break;
    case Id::Relu:
      for (std::size_t i = 0; i < d; ++i) out[i] = d_relu(x[i]);
      break;
  }
}

Vec Polyactivation::derivative_stack(const Vec& x) const {
  Vec out;
  derivative_stack(std::span<const double>(x.data(), x.size()), out);
  return out;
}

bool Polyactivation::saturates(Norm p) const {
  switch (kind_) {
    case Id::SinCos: return p == Norm::L2;
    case Id::Abs: return true;
    case Id::CRelu: return p == Norm::L1 || p == Norm::L2;
    case Id::IdAbs: return p == Norm::LInf;
    case Id::Tanh3: return p == Norm::L2;
    case Id::TanhPair: return p == Norm::L1;
    case Id::Relu: return false;
  }
  return false;
}

double Polyactivation::lipschitz_constant(Norm p) const {
  if (saturates(p)) return 1.0;
  switch (kind_) {
    case Id::SinCos:
      // sup(|sin|+|cos|) = sqrt(2); each component slope is at most 1.
      return p == Norm::L1 ? kSqrt2 : 1.0;
    case Id::CRelu:
      return 1.0;  // only one branch is active at a time
    case Id::IdAbs:
      return p == Norm::L1 ? 2.0 : kSqrt2;
    case Id::Tanh3:
      return p == Norm::L1 ? kTanh3Lip1 : 1.0;
    case Id::TanhPair:
      // sech^4 + (1 - sech^2)^2 <= 1 and both slopes are at most 1.
      return 1.0;
    case Id::Relu:
      return 1.0;
    case Id::Abs:
      return 1.0;
  }
  return 1.0;
}

double Polyactivation::check_saturation(Norm p, std::size_t sample_count) const {
  if (sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");

  // Midpoint grid on [-20, 20] (even offsets never land on the kink at 0),
  // then seeded random fill-in.
  std::vector<double> samples;
  samples.reserve(sample_count);
  const std::size_t grid_n = std::max<std::size_t>(2, sample_count / 2);
  for (std::size_t i = 0; i < grid_n; ++i)
    samples.push_back(-20.0 + (static_cast<double>(i) + 0.5) * 40.0 / static_cast<double>(grid_n));
  Rng rng(0xac7157a7ULL);
  while (samples.size() < sample_count) samples.push_back(rng.uniform(-20.0, 20.0));

  double worst = 0.0;
  Vec deriv;
  for (double x : samples) {
    derivative_stack(std::span<const double>(&x, 1), deriv);
    if (p == Norm::LInf) {
      for (double g : deriv) worst = std::max(worst, std::fabs(std::fabs(g) - 1.0));
    } else {
      const double pe = (p == Norm::L1) ? 1.0 : 2.0;
      double s = 0.0;
      for (double g : deriv) s += std::pow(std::fabs(g), pe);
      worst = std::max(worst, std::fabs(s - 1.0));
    }
  }
  return worst;
}

}  // namespace lipnn
