#include "lipnn/experiments.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lipnn/rng.hpp"

namespace lipnn {

namespace {

std::vector<std::size_t> full_dims(const RunSpec& spec, std::size_t input_dim,
                                   std::size_t classes) {
  std::vector<std::size_t> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(classes);
  return dims;
}

// Trainable (X, Y) pairs behind each norm-ball layer.
struct W23Layer {
  Matrix x;  // out x out
  Matrix y;  // in x out
  Vec bias;
};

struct W23Model {
  std::vector<W23Layer> layers;
  std::string activation;
  double bound = 0.1;
  std::size_t input_dim = 0;

  // Built weights; `normalized` records whether any produced layer left the
  // unit spectral-norm ball and had to be rescaled.
  Network materialize(bool& normalized) const {
    Network net;
    net.input_dim = input_dim;
    net.norm_p = Norm::L2;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      LayerSpec layer;
      layer.weight = w23_parameterize(layers[l].x, layers[l].y);
      const double norm = induced_norm(layer.weight, Norm::L2);
      if (norm > 1.0 + 1e-9) {
        layer.weight *= 1.0 / norm;
        normalized = true;
      }
      if (l + 1 == layers.size())
        layer.weight *= bound;  // the composed product carries the target constant
      else
        layer.activation = Polyactivation::by_id(activation);
      layer.bias = layers[l].bias;
      net.layers.push_back(std::move(layer));
    }
    validate_network(net);
    return net;
  }
};

RunResult train_w23(const RunSpec& spec, const Dataset& train_data, const Dataset& test_data,
                    std::uint64_t seed) {
  const TrainConfig& config = spec.train_config;
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");

  const auto dims = full_dims(spec, train_data.dims(), train_data.class_count);
  W23Model model;
  model.activation = spec.activation;
  model.bound = spec.w23_bound;
  model.input_dim = dims[0];
  Rng rng = Rng(seed).fork(0x2323);
  for (std::size_t l = 1; l < dims.size(); ++l) {
    W23Layer layer;
    const std::size_t out = dims[l], in = dims[l - 1];
    layer.x = Matrix(out, out);
    for (double& v : layer.x.data()) v = 0.05 * rng.normal();
    layer.y = Matrix(in, out);
    const double ystd = 1.0 / (4.0 * std::sqrt(static_cast<double>(in)));
    for (double& v : layer.y.data()) v = ystd * rng.normal();
    layer.bias = Vec(out, 0.0);
    model.layers.push_back(std::move(layer));
  }

  // Flat parameter order: per layer X, Y, bias.
  std::size_t total = 0;
  for (const W23Layer& layer : model.layers)
    total += layer.x.data().size() + layer.y.data().size() + layer.bias.size();
  Vec flat(total), grad_flat(total);
  auto gather = [&]() {
    std::size_t off = 0;
    for (const W23Layer& layer : model.layers) {
      for (double v : layer.x.data()) flat[off++] = v;
      for (double v : layer.y.data()) flat[off++] = v;
      for (double v : layer.bias) flat[off++] = v;
    }
  };
  auto scatter = [&]() {
    std::size_t off = 0;
    for (W23Layer& layer : model.layers) {
      for (double& v : layer.x.data()) v = flat[off++];
      for (double& v : layer.y.data()) v = flat[off++];
      for (double& v : layer.bias) v = flat[off++];
    }
  };
  gather();

  Cocob cocob(config.cocob_alpha);
  Adam adam(config.adam_lr);
  if (config.optimizer == "cocob")
    cocob.init(std::span<const double>(flat.data(), flat.size()));
  else
    adam.init(flat.size());

  RunResult result;
  TrainHistory& history = result.history;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  bool normalized = false;
  Network net = model.materialize(normalized);
  EvalMetrics train_eval = evaluate(net, train_data);
  EvalMetrics test_eval = evaluate(net, test_data);
  history.records.push_back({0, train_eval.nll, test_eval.nll, train_eval.accuracy,
                             test_eval.accuracy, trivial_bound(net, Norm::L2), elapsed()});

  PenaltySpec no_penalty;
  Gradients grads;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = batches(train_data, config.batch_size, seed, epoch);
    for (const auto& batch : order) {
      bool batch_normalized = false;
      net = model.materialize(batch_normalized);
      result.w23_normalization_applied |= batch_normalized;
      backprop(net, train_data, std::span<const std::size_t>(batch.data(), batch.size()),
               no_penalty, grads);

      // Pull the weight gradients back through the parameterization.
      std::size_t off = 0;
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Matrix dw = grads.weights[l];
        if (l + 1 == model.layers.size()) dw *= model.bound;
        const W23Grads pulled = w23_backward(model.layers[l].x, model.layers[l].y, dw);
        for (double v : pulled.dx.data()) grad_flat[off++] = v;
        for (double v : pulled.dy.data()) grad_flat[off++] = v;
        const Vec& db = *grads.biases[l];
        for (double v : db) grad_flat[off++] = v;
      }

      gather();
      if (config.optimizer == "cocob")
        cocob.step(std::span<double>(flat.data(), flat.size()),
                   std::span<const double>(grad_flat.data(), grad_flat.size()));
      else
        adam.step(std::span<double>(flat.data(), flat.size()),
                  std::span<const double>(grad_flat.data(), grad_flat.size()));
      scatter();
    }

    bool epoch_normalized = false;
    net = model.materialize(epoch_normalized);
    result.w23_normalization_applied |= epoch_normalized;
    const bool eval_now = (epoch % std::max<std::size_t>(1, config.eval_every) == 0) ||
                          epoch == config.epochs;
    if (eval_now) {
      train_eval = evaluate(net, train_data);
      test_eval = evaluate(net, test_data);
    }
    history.records.push_back({epoch, train_eval.nll, test_eval.nll, train_eval.accuracy,
                               test_eval.accuracy, trivial_bound(net, Norm::L2), elapsed()});
  }

  result.net = std::move(net);
  result.final_train = train_eval;
  result.final_test = test_eval;
  return result;
}

}  // namespace

Network build_initial_network(const RunSpec& spec, std::size_t input_dim, std::size_t classes,
                              std::uint64_t seed) {
  const auto dims = full_dims(spec, input_dim, classes);
  Network net;
  if (spec.activation == "sincos")
    net = random_phase_init(dims, spec.init_alpha, seed);
  else
    net = kaiming_init(dims, spec.activation, seed, /*hidden_bias=*/true, spec.norm_p);
  net.norm_p = spec.norm_p;
  return net;
}

RunResult run_training(const RunSpec& spec, const Dataset& train_data, const Dataset& test_data,
                       std::uint64_t seed) {
  if (spec.w23) return train_w23(spec, train_data, test_data, seed);

  Network net = build_initial_network(spec, train_data.dims(), train_data.class_count, seed);
  TrainConfig config = spec.train_config;
  config.seed = seed;
  config.penalty = spec.penalty;

  RunResult result;
  auto [trained, history] = train(std::move(net), train_data, test_data, config);
  result.net = std::move(trained);
  result.history = std::move(history);
  result.final_train = {result.history.records.back().train_nll,
                        result.history.records.back().train_acc};
  result.final_test = {result.history.records.back().test_nll,
                       result.history.records.back().test_acc};
  return result;
}

}  // namespace lipnn
