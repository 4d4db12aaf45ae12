#include "lipnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lipnn {

PenaltySpec::Kind PenaltySpec::kind_from_string(const std::string& s) {
  if (s == "none") return Kind::None;
  if (s == "trivial_product") return Kind::TrivialProduct;
  if (s == "frobenius") return Kind::Frobenius;
  if (s == "y17") return Kind::Y17;
  if (s == "n24") return Kind::N24;
  throw std::invalid_argument("unknown penalty kind: " + s);
}

std::string PenaltySpec::kind_to_string(Kind k) {
  switch (k) {
    case Kind::None: return "none";
    case Kind::TrivialProduct: return "trivial_product";
    case Kind::Frobenius: return "frobenius";
    case Kind::Y17: return "y17";
    case Kind::N24: return "n24";
  }
  return "?";
}

std::pair<double, Vec> cross_entropy(const Vec& logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw std::invalid_argument("label out of range");
  double zmax = logits[0];
  for (double z : logits) zmax = std::max(zmax, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  const double lse = zmax + std::log(sum);
  Vec grad(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) grad[i] = std::exp(logits[i] - lse);
  grad[static_cast<std::size_t>(label)] -= 1.0;
  return {lse - logits[static_cast<std::size_t>(label)], std::move(grad)};
}

namespace {

// Subgradient of the induced 1-norm: indicator of the max column with that
// column's entry signs; infinity norm is the row analog. Ties break to the
// lowest index.
Matrix l1_norm_subgradient(const Matrix& w) {
  std::size_t best = 0;
  double best_sum = -1.0;
  for (std::size_t j = 0; j < w.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) s += std::fabs(w(i, j));
    if (s > best_sum) {
      best_sum = s;
      best = j;
    }
  }
  Matrix g(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double x = w(i, best);
    g(i, best) = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return g;
}

Matrix linf_norm_subgradient(const Matrix& w) {
  std::size_t best = 0;
  double best_sum = -1.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) s += std::fabs(w(i, j));
    if (s > best_sum) {
      best_sum = s;
      best = i;
    }
  }
  Matrix g(w.rows(), w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const double x = w(best, j);
    g(best, j) = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  }
  return g;
}

Matrix rank1(const SpectralTriple& t) {
  Matrix g(t.u.size(), t.v.size());
  for (std::size_t i = 0; i < t.u.size(); ++i)
    for (std::size_t j = 0; j < t.v.size(); ++j) g(i, j) = t.u[i] * t.v[j];
  return g;
}

}  // namespace

PenaltyResult penalty_value_and_grads(const Network& net, const PenaltySpec& spec,
                                      std::vector<Vec>* warm) {
  const std::size_t layer_count = net.layers.size();
  PenaltyResult out;
  out.grads.reserve(layer_count);
  if (warm && warm->size() != layer_count) warm->assign(layer_count, Vec{});

  switch (spec.kind) {
    case PenaltySpec::Kind::None: {
      for (const LayerSpec& layer : net.layers)
        out.grads.emplace_back(layer.weight.rows(), layer.weight.cols());
      return out;
    }
    case PenaltySpec::Kind::TrivialProduct: {
      std::vector<double> norms(layer_count);
      std::vector<Matrix> subgrads;
      subgrads.reserve(layer_count);
      for (std::size_t l = 0; l < layer_count; ++l) {
        const Matrix& w = net.layers[l].weight;
        switch (spec.norm_p) {
          case Norm::L2: {
            const Vec* start = (warm && !(*warm)[l].empty()) ? &(*warm)[l] : nullptr;
            // Inside the minibatch loop a warm-started direction is enough;
            // verification-grade tolerance stays with the cold calls.
            const SpectralTriple t = power_iteration(w, start, warm ? 1e-9 : 1e-12);
            if (warm) (*warm)[l] = t.v;
            norms[l] = t.sigma;
            subgrads.push_back(rank1(t));
            break;
          }
          case Norm::L1:
            norms[l] = induced_norm(w, Norm::L1);
            subgrads.push_back(l1_norm_subgradient(w));
            break;
          case Norm::LInf:
            norms[l] = induced_norm(w, Norm::LInf);
            subgrads.push_back(linf_norm_subgradient(w));
            break;
        }
      }
      double value = spec.scale;
      for (double n : norms) value *= n;
      out.value = value;
      for (std::size_t l = 0; l < layer_count; ++l) {
        // Product rule: d/dW_l = (value / ||W_l||) * d||W_l||, taken as 0
        // when the factor itself vanishes.
        const double factor = norms[l] > 0.0 ? value / norms[l] : 0.0;
        out.grads.push_back(subgrads[l] * factor);
      }
      return out;
    }
    case PenaltySpec::Kind::Frobenius: {
      double value = 0.0;
      for (const LayerSpec& layer : net.layers) {
        const double f = frobenius_norm(layer.weight);
        value += 0.5 * f * f;
        out.grads.push_back(layer.weight);
      }
      out.value = value;
      return out;
    }
    case PenaltySpec::Kind::Y17: {
      double value = 0.0;
      for (std::size_t l = 0; l < layer_count; ++l) {
        const Matrix& w = net.layers[l].weight;
        const Vec* start = (warm && !(*warm)[l].empty()) ? &(*warm)[l] : nullptr;
        const SpectralTriple t = power_iteration(w, start, warm ? 1e-9 : 1e-12);
        if (warm) (*warm)[l] = t.v;
        value += 0.5 * t.sigma * t.sigma;
        out.grads.push_back(rank1(t) * t.sigma);
      }
      out.value = value;
      return out;
    }
    case PenaltySpec::Kind::N24: {
      double value = 0.0;
      for (std::size_t l = 0; l < layer_count; ++l) {
        const Matrix& w = net.layers[l].weight;
        const double n = static_cast<double>(std::max(w.rows(), w.cols()));
        const Vec* start = (warm && !(*warm)[l].empty()) ? &(*warm)[l] : nullptr;
        const SpectralTriple t = power_iteration(w, start, warm ? 1e-9 : 1e-12);
        if (warm) (*warm)[l] = t.v;
        const double f = frobenius_norm(w);
        value += 0.5 * t.sigma * t.sigma - f * f / (2.0 * n);
        out.grads.push_back(rank1(t) * t.sigma - w * (1.0 / n));
      }
      out.value = value;
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

namespace {

// Batched activations: rows are samples, fan-out blocks are concatenated
// along the row so batched layers stay plain GEMMs.
Matrix apply_rows(const Polyactivation& act, const Matrix& z) {
  const std::size_t b = z.rows(), h = z.cols(), k = act.order();
  Matrix out(b, k * h);
  Vec buf;
  for (std::size_t r = 0; r < b; ++r) {
    act.apply(std::span<const double>(z.row(r), h), buf);
    std::copy(buf.begin(), buf.end(), out.row(r));
  }
  return out;
}

Matrix derivative_rows(const Polyactivation& act, const Matrix& z) {
  const std::size_t b = z.rows(), h = z.cols(), k = act.order();
  Matrix out(b, k * h);
  Vec buf;
  for (std::size_t r = 0; r < b; ++r) {
    act.derivative_stack(std::span<const double>(z.row(r), h), buf);
    std::copy(buf.begin(), buf.end(), out.row(r));
  }
  return out;
}

Matrix gather_rows(const Dataset& data, std::span<const std::size_t> batch) {
  Matrix x(batch.size(), data.dims());
  for (std::size_t r = 0; r < batch.size(); ++r)
    std::copy(data.features.row(batch[r]), data.features.row(batch[r]) + data.dims(), x.row(r));
  return x;
}

struct BatchForward {
  std::vector<Matrix> inputs;   // inputs[l] feeds layer l
  std::vector<Matrix> preacts;  // z_l per layer
  Matrix logits;
};

BatchForward forward_batch(const Network& net, Matrix x) {
  BatchForward fwd;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    fwd.inputs.push_back(x);
    Matrix z = matmul_transB(x, layer.weight);
    if (layer.bias)
      for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t j = 0; j < z.cols(); ++j) z(r, j) += (*layer.bias)[j];
    fwd.preacts.push_back(z);
    if (layer.activation)
      x = apply_rows(*layer.activation, z);
    else
      x = std::move(z);
  }
  fwd.logits = std::move(x);
  return fwd;
}

}  // namespace

double backprop(const Network& net, const Dataset& data, std::span<const std::size_t> batch,
                const PenaltySpec& spec, Gradients& out, std::vector<Vec>* warm) {
  if (batch.empty()) throw std::invalid_argument("backprop: empty batch");
  const std::size_t b = batch.size();
  BatchForward fwd = forward_batch(net, gather_rows(data, batch));

  // Mean cross entropy and dL/dlogits, scaled by 1/B.
  double loss = 0.0;
  Matrix delta(b, fwd.logits.cols());
  Vec logits_row(fwd.logits.cols());
  for (std::size_t r = 0; r < b; ++r) {
    std::copy(fwd.logits.row(r), fwd.logits.row(r) + fwd.logits.cols(), logits_row.begin());
    auto [l, g] = cross_entropy(logits_row, data.labels[batch[r]]);
    loss += l;
    for (std::size_t j = 0; j < g.size(); ++j) delta(r, j) = g[j] / static_cast<double>(b);
  }
  loss /= static_cast<double>(b);

  out.weights.assign(net.layers.size(), Matrix());
  out.biases.assign(net.layers.size(), std::nullopt);

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const LayerSpec& layer = net.layers[l];
    out.weights[l] = matmul_transA(delta, fwd.inputs[l]);
    if (layer.bias) {
      Vec db(layer.bias->size(), 0.0);
      for (std::size_t r = 0; r < delta.rows(); ++r)
        for (std::size_t j = 0; j < delta.cols(); ++j) db[j] += delta(r, j);
      out.biases[l] = std::move(db);
    }
    if (l == 0) break;
    Matrix g = matmul(delta, layer.weight);  // gradient at this layer's input
    // Contract the previous layer's fan-out blocks through its slopes.
    const LayerSpec& prev = net.layers[l - 1];
    if (!prev.activation) {
      delta = std::move(g);
      continue;
    }
    const Matrix d = derivative_rows(*prev.activation, fwd.preacts[l - 1]);
    const std::size_t h = fwd.preacts[l - 1].cols();
    const std::size_t k = prev.activation->order();
    Matrix dz(g.rows(), h);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double* gr = g.row(r);
      const double* dr = d.row(r);
      double* zr = dz.row(r);
      for (std::size_t block = 0; block < k; ++block)
        for (std::size_t i = 0; i < h; ++i) zr[i] += gr[block * h + i] * dr[block * h + i];
    }
    delta = std::move(dz);
  }

  if (spec.kind != PenaltySpec::Kind::None && spec.lambda > 0.0) {
    const PenaltyResult penalty = penalty_value_and_grads(net, spec, warm);
    loss += spec.lambda * penalty.value;
    for (std::size_t l = 0; l < net.layers.size(); ++l)
      out.weights[l] += penalty.grads[l] * spec.lambda;
  }
  return loss;
}

void Cocob::init(std::span<const double> initial_params) {
  initial_.assign(initial_params.begin(), initial_params.end());
  max_grad_.assign(initial_params.size(), 0.0);
  grad_abs_sum_.assign(initial_params.size(), 0.0);
  reward_.assign(initial_params.size(), 0.0);
  bet_sum_.assign(initial_params.size(), 0.0);
}

void Cocob::step(std::span<double> params, std::span<const double> grads) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double ag = std::fabs(g);
    max_grad_[i] = std::max(max_grad_[i], ag);
    if (max_grad_[i] == 0.0) continue;  // no signal yet on this coordinate
    grad_abs_sum_[i] += ag;
    reward_[i] = std::max(reward_[i] - g * (params[i] - initial_[i]), 0.0);
    bet_sum_[i] -= g;
    const double denom = max_grad_[i] * std::max(grad_abs_sum_[i] + max_grad_[i], alpha_ * max_grad_[i]);
    params[i] = initial_[i] + bet_sum_[i] / denom * (max_grad_[i] + reward_[i]);
  }
}

void Adam::init(std::size_t n) {
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
  t_ = 0;
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

EvalMetrics evaluate(const Network& net, const Dataset& data) {
  EvalMetrics m;
  const std::size_t chunk = 512;
  std::vector<std::size_t> idx(chunk);
  Vec logits_row(net.output_dim());
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t stop = std::min(data.size(), start + chunk);
    idx.resize(stop - start);
    for (std::size_t i = start; i < stop; ++i) idx[i - start] = i;
    const BatchForward fwd = forward_batch(
        net, gather_rows(data, std::span<const std::size_t>(idx.data(), idx.size())));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      std::copy(fwd.logits.row(r), fwd.logits.row(r) + fwd.logits.cols(), logits_row.begin());
      m.nll += cross_entropy(logits_row, data.labels[idx[r]]).first;
      std::size_t argmax = 0;
      for (std::size_t j = 1; j < logits_row.size(); ++j)
        if (logits_row[j] > logits_row[argmax]) argmax = j;
      correct += (static_cast<int>(argmax) == data.labels[idx[r]]);
    }
  }
  m.nll /= static_cast<double>(data.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return m;
}

std::string TrainHistory::to_csv() const {
  std::ostringstream os;
  os << "epoch,train_nll,test_nll,train_acc,test_acc,K,seconds\n";
  char buf[256];
  for (const EpochRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.epoch,
                  r.train_nll, r.test_nll, r.train_acc, r.test_acc, r.trivial_k, r.seconds);
    os << buf;
  }
  return os.str();
}

namespace {

struct ParamView {
  std::vector<std::span<double>> slots;
  std::size_t total = 0;
};

ParamView parameter_view(Network& net) {
  ParamView view;
  for (LayerSpec& layer : net.layers) {
    view.slots.emplace_back(layer.weight.data().data(), layer.weight.data().size());
    view.total += layer.weight.data().size();
    if (layer.bias) {
      view.slots.emplace_back(layer.bias->data(), layer.bias->size());
      view.total += layer.bias->size();
    }
  }
  return view;
}

void flatten_grads(const Network& net, const Gradients& grads, Vec& flat) {
  flat.clear();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    flat.insert(flat.end(), grads.weights[l].data().begin(), grads.weights[l].data().end());
    if (net.layers[l].bias) {
      const Vec& db = grads.biases[l] ? *grads.biases[l] : Vec(net.layers[l].bias->size(), 0.0);
      flat.insert(flat.end(), db.begin(), db.end());
    }
  }
}

}  // namespace

std::pair<Network, TrainHistory> train(Network net, const Dataset& train_data,
                                       const Dataset& test_data, const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (config.penalty.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (config.penalty.scale <= 0.0) throw std::invalid_argument("penalty scale must be > 0");
  if (config.optimizer != "cocob" && config.optimizer != "adam")
    throw std::invalid_argument("unknown optimizer: " + config.optimizer);
  if (train_data.dims() != net.input_dim) throw std::invalid_argument("dataset dims mismatch");
  validate_network(net);

  ParamView view = parameter_view(net);
  Vec flat_params(view.total), flat_grads;
  auto gather_params = [&]() {
    std::size_t off = 0;
    for (const auto& s : view.slots) {
      std::copy(s.begin(), s.end(), flat_params.begin() + static_cast<std::ptrdiff_t>(off));
      off += s.size();
    }
  };
  auto scatter_params = [&]() {
    std::size_t off = 0;
    for (auto& s : view.slots) {
      std::copy(flat_params.begin() + static_cast<std::ptrdiff_t>(off),
                flat_params.begin() + static_cast<std::ptrdiff_t>(off + s.size()), s.begin());
      off += s.size();
    }
  };
  gather_params();

  Cocob cocob(config.cocob_alpha);
  Adam adam(config.adam_lr);
  if (config.optimizer == "cocob")
    cocob.init(std::span<const double>(flat_params.data(), flat_params.size()));
  else
    adam.init(flat_params.size());

  std::vector<Vec> warm(net.layers.size());  // power-iteration warm starts
  TrainHistory history;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  EvalMetrics train_eval = evaluate(net, train_data);
  EvalMetrics test_eval = evaluate(net, test_data);
  double k_now = trivial_bound(net, net.norm_p);
  history.records.push_back(
      {0, train_eval.nll, test_eval.nll, train_eval.accuracy, test_eval.accuracy, k_now, elapsed()});

  Gradients grads;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = batches(train_data, config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < order.size(); ++b) {
      double loss;
      try {
        loss = backprop(net, train_data,
                        std::span<const std::size_t>(order[b].data(), order[b].size()),
                        config.penalty, grads, &warm);
      } catch (const std::exception& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                                 ": " + e.what());
      }
      if (!std::isfinite(loss))
        throw std::runtime_error("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) +
                                 ": non-finite loss");
      flatten_grads(net, grads, flat_grads);
      gather_params();
      if (config.optimizer == "cocob")
        cocob.step(std::span<double>(flat_params.data(), flat_params.size()),
                   std::span<const double>(flat_grads.data(), flat_grads.size()));
      else
        adam.step(std::span<double>(flat_params.data(), flat_params.size()),
                  std::span<const double>(flat_grads.data(), flat_grads.size()));
      scatter_params();
    }

    const bool eval_now = (epoch % std::max<std::size_t>(1, config.eval_every) == 0) ||
                          epoch == config.epochs;
    if (eval_now) {
      train_eval = evaluate(net, train_data);
      test_eval = evaluate(net, test_data);
    }
    k_now = trivial_bound(net, net.norm_p);
    history.records.push_back({epoch, train_eval.nll, test_eval.nll, train_eval.accuracy,
                               test_eval.accuracy, k_now, elapsed()});
    if (config.verbose)
      std::fprintf(stderr, "epoch %zu/%zu: train_nll=%.5f test_acc=%.4f K=%.4f (%.1fs)\n", epoch,
                   config.epochs, train_eval.nll, test_eval.accuracy, k_now, elapsed());
  }
  return {std::move(net), std::move(history)};
}

}  // namespace lipnn
