#ifndef LIPNN_NETWORK_HPP
#define LIPNN_NETWORK_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lipnn/activations.hpp"
#include "lipnn/matrix.hpp"

namespace lipnn {

// One layer: a linear map, then (except on the final layer) a polyactivation.
// The weight of a layer following an order-K activation has K * prev_rows
// columns; a sincos layer's weight is the concatenated (A B) block.
// Hidden-layer biases are pre-activation shifts and are only allowed for
// non-sinusoidal activations: sinusoidal biases are absorbed into the
// weights at construction and never stored.
struct LayerSpec {
  Matrix weight;
  std::optional<Polyactivation> activation;
  std::optional<Vec> bias;
};

struct Network {
  std::vector<LayerSpec> layers;
  std::size_t input_dim = 0;
  Norm norm_p = Norm::L2;

  std::size_t output_dim() const { return layers.back().weight.rows(); }
  std::size_t depth() const { return layers.size(); }
};

// Throws std::invalid_argument when the dimension chain is inconsistent,
// the final layer carries an activation, or a sincos layer carries a bias.
void validate_network(const Network& net);

// Per-layer intermediate values of one forward pass.
struct ForwardTrace {
  std::vector<Vec> inputs;          // inputs[l] feeds layer l; inputs[0] = x
  std::vector<Vec> preactivations;  // z_l = W_l * inputs[l] + b_l
  Vec logits;
};

Vec forward(const Network& net, const Vec& x);
ForwardTrace forward_trace(const Network& net, const Vec& x);

// Vector-Jacobian product J(x)^T v computed by a backward sweep over a
// stored trace. v has output_dim entries.
Vec input_gradient(const Network& net, const ForwardTrace& trace, const Vec& v);

// Exact Jacobian (output_dim x input_dim) as the chain product of weight
// matrices and derivative-stack expansions.
Matrix jacobian(const Network& net, const Vec& x);

// Product over layers of activation Lipschitz constants and induced weight
// norms. Biases never contribute.
double trivial_bound(const Network& net, Norm p);

// Phase rotation removing a sinusoidal bias:
//   A' = A Cos(b) - B Sin(b),  B' = A Sin(b) + B Cos(b),
// which satisfies A' cos(z) + B' sin(z) = A cos(z - b) + B sin(z - b) for
// every z. To absorb a unit written as A cos(Wx + b) + B sin(Wx + b), pass
// the negated bias.
std::pair<Matrix, Matrix> absorb_bias(const Matrix& a, const Matrix& b, const Vec& bias);

// Random-phase initialized sincos network in canonical form:
// linear -> sincos -> ... -> linear(+zero bias). dims lists
// {input, hidden..., output} widths. The leading linear map is drawn i.i.d.
// Gaussian with unit second moment (variance 1/fan_in); every subsequent
// weight is a random-phase (A B) pair at scale alpha.
Network random_phase_init(const std::vector<std::size_t>& dims, double alpha, std::uint64_t seed);

// The bias-free recursion z^l = A^l cos(z^{l-1}) + B^l sin(z^{l-1}) with
// z^0 = x, realized as an identity first layer followed by random-phase
// pairs. dims = {d_0, ..., d_L} gives a depth-L stack.
Network random_phase_stack(const std::vector<std::size_t>& dims, double alpha, std::uint64_t seed);

// Kaiming-style uniform init (scale sqrt(3/fan_in)) for the non-sinusoidal
// activations; hidden biases start at zero and are trainable when
// `hidden_bias` is set.
Network kaiming_init(const std::vector<std::size_t>& dims, const std::string& activation_id,
                     std::uint64_t seed, bool hidden_bias, Norm norm_p = Norm::L2);

// Reparameterize layers (l, l+1) around a 1-homogeneous activation by
// Lambda = diag(lambda, 1, ..., 1): W_l -> Lambda^{-1} W_l (and bias
// likewise), W_{l+1} -> W_{l+1} Lambda. The represented function is
// unchanged; the trivial bound is not.
Network relu_rescale(const Network& net, std::size_t layer_index, double lambda);

// LASL bias-pathology fixtures with both bias choices.
struct Counterexample {
  Network loose;  // bias choice under which the bound is maximally loose
  Network tight;  // bias choice under which the bound is (nearly) attained
  double expected_trivial_bound = 0.0;
};

Counterexample counterexample_relu(std::size_t d);
Counterexample counterexample_tanh(std::size_t d);
Counterexample counterexample_sin(std::size_t d);  // hidden width 2d

// Rational parameterization of the induced 2-norm ball:
//   W = 4 (I+Z)^{-1} (I-Z) (I+Z)^{-T} Y^T,  Z = X - X^T + Y^T Y,
// with X square (n x n) and Y (m x n); the result is n x m. Throws
// std::runtime_error("parameterization singular point") when I + Z is
// numerically singular.
Matrix w23_parameterize(const Matrix& x, const Matrix& y);

struct W23Grads {
  Matrix dx;
  Matrix dy;
};

// Pullback of a loss gradient through w23_parameterize.
W23Grads w23_backward(const Matrix& x, const Matrix& y, const Matrix& grad_w);

}  // namespace lipnn

#endif  // LIPNN_NETWORK_HPP
