#include "lipnn/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lipnn/rng.hpp"

namespace lipnn {

void validate_network(const Network& net) {
  if (net.layers.empty()) throw std::invalid_argument("network has no layers");
  std::size_t dim = net.input_dim;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    if (layer.weight.cols() != dim)
      throw std::invalid_argument("layer " + std::to_string(l) + ": weight cols " +
                                  std::to_string(layer.weight.cols()) + " != incoming dim " +
                                  std::to_string(dim));
    if (layer.bias && layer.bias->size() != layer.weight.rows())
      throw std::invalid_argument("layer " + std::to_string(l) + ": bias length mismatch");
    const bool final_layer = (l + 1 == net.layers.size());
    if (final_layer) {
      if (layer.activation) throw std::invalid_argument("final layer must be affine");
    } else {
      // A hidden layer without an activation is an identity pass-through
      // (the linear-activation fixture).
      if (layer.activation) {
        if (layer.activation->kind() == Polyactivation::Id::SinCos && layer.bias)
          throw std::invalid_argument("sincos layers carry no bias (absorb it first)");
        dim = layer.activation->order() * layer.weight.rows();
      } else {
        dim = layer.weight.rows();
      }
    }
  }
}

namespace {

Vec affine(const LayerSpec& layer, const Vec& x) {
  Vec z = matvec(layer.weight, x);
  if (layer.bias)
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += (*layer.bias)[i];
  return z;
}

}  // namespace

Vec forward(const Network& net, const Vec& x) {
  if (x.size() != net.input_dim) throw std::invalid_argument("forward: input dim mismatch");
  Vec a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Vec z = affine(net.layers[l], a);
    if (net.layers[l].activation)
      a = net.layers[l].activation->apply(z);
    else
      a = std::move(z);
  }
  return a;
}

ForwardTrace forward_trace(const Network& net, const Vec& x) {
  if (x.size() != net.input_dim) throw std::invalid_argument("forward: input dim mismatch");
  ForwardTrace trace;
  trace.inputs.reserve(net.layers.size());
  trace.preactivations.reserve(net.layers.size());
  Vec a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    trace.inputs.push_back(a);
    Vec z = affine(net.layers[l], a);
    trace.preactivations.push_back(z);
    if (net.layers[l].activation)
      a = net.layers[l].activation->apply(z);
    else
      a = std::move(z);
  }
  trace.logits = a;
  return trace;
}

Vec input_gradient(const Network& net, const ForwardTrace& trace, const Vec& v) {
  if (v.size() != net.output_dim()) throw std::invalid_argument("input_gradient: dim mismatch");
  Vec g = v;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const LayerSpec& layer = net.layers[l];
    if (layer.activation) {
      // g currently has K*h entries; contract through the derivative stack.
      const Vec d = layer.activation->derivative_stack(trace.preactivations[l]);
      const std::size_t h = trace.preactivations[l].size();
      const std::size_t k = layer.activation->order();
      Vec gz(h, 0.0);
      for (std::size_t block = 0; block < k; ++block)
        for (std::size_t i = 0; i < h; ++i) gz[i] += g[block * h + i] * d[block * h + i];
      g = matvec_transposed(layer.weight, gz);
    } else {
      g = matvec_transposed(layer.weight, g);
    }
  }
  return g;
}

Matrix jacobian(const Network& net, const Vec& x) {
  const ForwardTrace trace = forward_trace(net, x);
  Matrix j = net.layers[0].weight;  // Jacobian of the first linear map
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    if (!net.layers[l].activation) {
      j = matmul(net.layers[l + 1].weight, j);
      continue;
    }
    const Polyactivation& act = *net.layers[l].activation;
    const Vec d = act.derivative_stack(trace.preactivations[l]);
    const std::size_t h = trace.preactivations[l].size();
    const std::size_t k = act.order();
    Matrix expanded(k * h, j.cols());
    for (std::size_t block = 0; block < k; ++block)
      for (std::size_t i = 0; i < h; ++i) {
        const double di = d[block * h + i];
        const double* src = j.row(i);
        double* dst = expanded.row(block * h + i);
        for (std::size_t c = 0; c < j.cols(); ++c) dst[c] = di * src[c];
      }
    j = matmul(net.layers[l + 1].weight, expanded);
  }
  return j;
}

double trivial_bound(const Network& net, Norm p) {
  double k = 1.0;
  for (const LayerSpec& layer : net.layers) {
    k *= induced_norm(layer.weight, p);
    if (layer.activation) k *= layer.activation->lipschitz_constant(p);
  }
  return k;
}

std::pair<Matrix, Matrix> absorb_bias(const Matrix& a, const Matrix& b, const Vec& bias) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("absorb_bias: A/B shape mismatch");
  if (bias.size() != a.cols()) throw std::invalid_argument("absorb_bias: bias length mismatch");
  Matrix a2(a.rows(), a.cols()), b2(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double c = std::cos(bias[j]), s = std::sin(bias[j]);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      a2(i, j) = a(i, j) * c - b(i, j) * s;
      b2(i, j) = a(i, j) * s + b(i, j) * c;
    }
  }
  return {a2, b2};
}

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = stddev * rng.normal();
  return m;
}

// Concatenated (A B) block from the random-phase construction: draw
// \bar A, \bar B i.i.d. Gaussian with variance alpha/fan_in and rotate each
// input coordinate pair by a uniform phase.
Matrix random_phase_pair(std::size_t rows, std::size_t fan_in, double alpha, Rng& rng) {
  const double stddev = std::sqrt(alpha / static_cast<double>(fan_in));
  const Matrix a_bar = gaussian_matrix(rows, fan_in, stddev, rng);
  const Matrix b_bar = gaussian_matrix(rows, fan_in, stddev, rng);
  Matrix ab(rows, 2 * fan_in);
  for (std::size_t j = 0; j < fan_in; ++j) {
    const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t i = 0; i < rows; ++i) {
      ab(i, j) = a_bar(i, j) * c + b_bar(i, j) * s;
      ab(i, fan_in + j) = -a_bar(i, j) * s + b_bar(i, j) * c;
    }
  }
  return ab;
}

}  // namespace

Network random_phase_init(const std::vector<std::size_t>& dims, double alpha, std::uint64_t seed) {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (dims.size() < 2) throw std::invalid_argument("need at least input and output dims");
  Rng rng = Rng(seed).fork(0x1a7e);
  Network net;
  net.input_dim = dims[0];
  net.norm_p = Norm::L2;

  LayerSpec first;
  first.weight = gaussian_matrix(dims[1], dims[0], std::sqrt(1.0 / static_cast<double>(dims[0])), rng);
  first.activation = Polyactivation::by_id("sincos");
  net.layers.push_back(std::move(first));

  for (std::size_t l = 2; l < dims.size(); ++l) {
    LayerSpec layer;
    layer.weight = random_phase_pair(dims[l], dims[l - 1], alpha, rng);
    if (l + 1 < dims.size())
      layer.activation = Polyactivation::by_id("sincos");
    else
      layer.bias = Vec(dims[l], 0.0);
    net.layers.push_back(std::move(layer));
  }
  validate_network(net);
  return net;
}

Network random_phase_stack(const std::vector<std::size_t>& dims, double alpha, std::uint64_t seed) {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (dims.size() < 2) throw std::invalid_argument("need at least input and output dims");
  Rng rng = Rng(seed).fork(0x57ac);
  Network net;
  net.input_dim = dims[0];
  net.norm_p = Norm::L2;

  LayerSpec lead;
  lead.weight = Matrix::identity(dims[0]);
  lead.activation = Polyactivation::by_id("sincos");
  net.layers.push_back(std::move(lead));

  for (std::size_t l = 1; l < dims.size(); ++l) {
    LayerSpec layer;
    layer.weight = random_phase_pair(dims[l], dims[l - 1], alpha, rng);
    if (l + 1 < dims.size()) layer.activation = Polyactivation::by_id("sincos");
    net.layers.push_back(std::move(layer));
  }
  validate_network(net);
  return net;
}

Network kaiming_init(const std::vector<std::size_t>& dims, const std::string& activation_id,
                     std::uint64_t seed, bool hidden_bias, Norm norm_p) {
  if (dims.size() < 2) throw std::invalid_argument("need at least input and output dims");
  const Polyactivation act = Polyactivation::by_id(activation_id);
  if (act.kind() == Polyactivation::Id::SinCos)
    throw std::invalid_argument("use random_phase_init for sincos networks");
  Rng rng = Rng(seed).fork(0x4a11);
  Network net;
  net.input_dim = dims[0];
  net.norm_p = norm_p;

  std::size_t fan_in = dims[0];
  for (std::size_t l = 1; l < dims.size(); ++l) {
    LayerSpec layer;
    const double scale = std::sqrt(3.0 / static_cast<double>(fan_in));
    layer.weight = Matrix(dims[l], fan_in);
    for (double& w : layer.weight.data()) w = rng.uniform(-scale, scale);
    if (l + 1 < dims.size()) {
      layer.activation = act;
      if (hidden_bias) layer.bias = Vec(dims[l], 0.0);
      fan_in = act.order() * dims[l];
    } else {
      layer.bias = Vec(dims[l], 0.0);
    }
    net.layers.push_back(std::move(layer));
  }
  validate_network(net);
  return net;
}

Network relu_rescale(const Network& net, std::size_t layer_index, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be positive");
  if (layer_index + 1 >= net.layers.size())
    throw std::invalid_argument("relu_rescale: need a following layer");
  const LayerSpec& here = net.layers[layer_index];
  if (!here.activation) throw std::invalid_argument("relu_rescale: layer has no activation");
  switch (here.activation->kind()) {
    case Polyactivation::Id::Relu:
    case Polyactivation::Id::Abs:
    case Polyactivation::Id::CRelu:
      break;
    default:
      throw std::invalid_argument("relu_rescale: activation is not 1-homogeneous");
  }

  Network out = net;
  LayerSpec& lo = out.layers[layer_index];
  LayerSpec& hi = out.layers[layer_index + 1];
  const std::size_t h = lo.weight.rows();
  const std::size_t k = lo.activation->order();

  // Lambda^{-1} on row 0 of the lower weight (and bias).
  for (std::size_t j = 0; j < lo.weight.cols(); ++j) lo.weight(0, j) /= lambda;
  if (lo.bias) (*lo.bias)[0] /= lambda;
  // Lambda on the matching fan-out columns of the upper weight.
  for (std::size_t block = 0; block < k; ++block)
    for (std::size_t i = 0; i < hi.weight.rows(); ++i) hi.weight(i, block * h) *= lambda;
  return out;
}

namespace {

Matrix ones_column(std::size_t d) {
  Matrix m(d, 1, 1.0);
  return m;
}

Network lasl_unit(const Matrix& w0, const std::optional<Vec>& bias, const std::string& act,
                  const Matrix& w1) {
  Network net;
  net.input_dim = w0.cols();
  net.norm_p = Norm::L2;
  LayerSpec hidden;
  hidden.weight = w0;
  hidden.activation = Polyactivation::by_id(act);
  hidden.bias = bias;
  net.layers.push_back(std::move(hidden));
  LayerSpec readout;
  readout.weight = w1;
  net.layers.push_back(std::move(readout));
  validate_network(net);
  return net;
}

}  // namespace

Counterexample counterexample_relu(std::size_t d) {
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  Matrix w1(1, d);
  Vec loose_bias(d), tight_bias(d);
  for (std::size_t i = 0; i < d; ++i) {
    const bool odd = (i % 2 == 0);  // i is 0-based; entry i+1 of the paper
    w1(0, i) = odd ? -1.0 : 1.0;
    loose_bias[i] = static_cast<double>(i + 1);
    tight_bias[i] = odd ? 1.0 : -1.0;
  }
  Counterexample out;
  out.loose = lasl_unit(ones_column(d), loose_bias, "relu", w1);
  out.tight = lasl_unit(ones_column(d), tight_bias, "relu", w1);
  out.expected_trivial_bound = static_cast<double>(d);
  return out;
}

Counterexample counterexample_tanh(std::size_t d) {
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  // tanh itself is not in the polyactivation registry; the tanh_pair member
  // (tanh, x - tanh) carries tanh in its first block, so route the readout
  // through that block only.
  Matrix w1(1, 2 * d);
  Vec loose_bias(d), zero_bias(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    w1(0, i) = 1.0;
    loose_bias[i] = static_cast<double>(i + 1);
  }
  Counterexample out;
  out.loose = lasl_unit(ones_column(d), loose_bias, "tanh_pair", w1);
  out.tight = lasl_unit(ones_column(d), zero_bias, "tanh_pair", w1);
  out.expected_trivial_bound = static_cast<double>(d);
  return out;
}

Counterexample counterexample_sin(std::size_t d) {
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  const std::size_t width = 2 * d;
  // Biases b_i = i*pi absorbed exactly: A' = -Sin(b) = 0, B' = Cos(b) with
  // alternating signs; the resulting readout cancels pairwise so the
  // function is identically zero while the trivial bound stays at 2d.
  Matrix loose_w1(1, 2 * width), tight_w1(1, 2 * width);
  for (std::size_t i = 0; i < width; ++i) {
    loose_w1(0, i) = 0.0;
    loose_w1(0, width + i) = (i % 2 == 0) ? -1.0 : 1.0;  // cos((i+1) pi)
    tight_w1(0, i) = 0.0;
    tight_w1(0, width + i) = 1.0;  // b' = 0 keeps B' = 1
  }
  Counterexample out;
  out.loose = lasl_unit(ones_column(width), std::nullopt, "sincos", loose_w1);
  out.tight = lasl_unit(ones_column(width), std::nullopt, "sincos", tight_w1);
  out.expected_trivial_bound = static_cast<double>(2 * d);
  return out;
}

Matrix w23_parameterize(const Matrix& x, const Matrix& y) {
  if (x.rows() != x.cols()) throw std::invalid_argument("w23: X must be square");
  if (y.cols() != x.rows()) throw std::invalid_argument("w23: Y must be m x n");
  const std::size_t n = x.rows();
  Matrix z = x - x.transposed() + matmul_transA(y, y);
  Matrix i_plus_z = Matrix::identity(n) + z;
  Matrix p;
  try {
    p = inverse(i_plus_z);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("parameterization singular point");
  }
  const Matrix i_minus_z = Matrix::identity(n) - z;
  Matrix w = matmul(p, i_minus_z);
  w = matmul_transB(w, p);           // P (I-Z) P^T
  w = matmul_transB(w, y);           // ... Y^T
  w *= 4.0;
  return w;
}

W23Grads w23_backward(const Matrix& x, const Matrix& y, const Matrix& grad_w) {
  const std::size_t n = x.rows();
  Matrix z = x - x.transposed() + matmul_transA(y, y);
  Matrix p = inverse(Matrix::identity(n) + z);
  const Matrix nmat = Matrix::identity(n) - z;
  Matrix m = matmul_transB(matmul(p, nmat), p) * 4.0;  // W = M Y^T

  const Matrix h = matmul(grad_w, y);  // dL/dM
  const Matrix pt = p.transposed();
  const Matrix nt = nmat.transposed();

  // dL/dZ = -4 [P^T H P N^T P^T + P^T H P + P^T H^T P N P^T]
  const Matrix pthp = matmul(matmul(pt, h), p);
  const Matrix ptht_p = matmul(matmul(pt, h.transposed()), p);
  Matrix dz = matmul(matmul(pthp, nt), pt);
  dz += pthp;
  dz += matmul(matmul(ptht_p, nmat), pt);
  dz *= -4.0;

  W23Grads grads;
  grads.dx = dz - dz.transposed();
  grads.dy = matmul(y, dz + dz.transposed()) + matmul_transA(grad_w, m);
  return grads;
}

}  // namespace lipnn
