#ifndef LIPNN_ACTIVATIONS_HPP
#define LIPNN_ACTIVATIONS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lipnn/matrix.hpp"

namespace lipnn {

// A polyactivation is an ordered tuple of K scalar functions applied to each
// coordinate, fanning a d-vector out to a (K*d)-vector: block k of the
// output holds sigma_k applied elementwise. Registry ids are the stable
// strings used in config files and checkpoints:
//   "sincos"    (cos x, sin x)            saturates p=2
//   "abs"       |x|                       saturates all p
//   "crelu"     (max(0,x), max(0,-x))     saturates p in [1,inf)
//   "id_abs"    (x, |x|)                  saturates p=inf
//   "tanh3"     (tanh x, sech x, logcosh) saturates p=2
//   "tanh_pair" (tanh x, x - tanh x)      saturates p=1
//   "relu"      max(0, x)                 baseline, not saturated
class Polyactivation {
 public:
  enum class Id { SinCos, Abs, CRelu, IdAbs, Tanh3, TanhPair, Relu };

  static Polyactivation by_id(const std::string& id);
  static const std::vector<std::string>& registry_ids();

  const std::string& id() const { return name_; }
  Id kind() const { return kind_; }
  std::size_t order() const { return order_; }

  // out has length order() * x.size(); block k occupies [k*d, (k+1)*d).
  void apply(std::span<const double> x, Vec& out) const;
  Vec apply(const Vec& x) const;

  // Entry k*d + i is sigma_k'(x_i). Kinked members (abs, relu, crelu,
  // id_abs) use the convention sigma' = 0 at the kink.
  void derivative_stack(std::span<const double> x, Vec& out) const;
  Vec derivative_stack(const Vec& x) const;

  // Exact Lipschitz constant of the fan-out map in the induced p-norm,
  // from a built-in table.
  double lipschitz_constant(Norm p) const;

  bool saturates(Norm p) const;

  // Max deviation of the saturation identity over a deterministic midpoint
  // grid on [-20, 20] plus seeded random samples. For p < inf this is
  // max |sum_k |sigma_k'(x)|^p - 1|; for p = inf, max_k ||sigma_k'(x)| - 1|.
  double check_saturation(Norm p, std::size_t sample_count) const;

 private:
  Polyactivation(Id kind, std::string name, std::size_t order)
      : kind_(kind), name_(std::move(name)), order_(order) {}

  Id kind_;
  std::string name_;
  std::size_t order_;
};

}  // namespace lipnn

#endif  // LIPNN_ACTIVATIONS_HPP
