#ifndef LIPNN_TRAINING_HPP
#define LIPNN_TRAINING_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lipnn/data.hpp"
#include "lipnn/network.hpp"

namespace lipnn {

// Which Lipschitz-related regularizer augments the data loss.
struct PenaltySpec {
  enum class Kind { None, TrivialProduct, Frobenius, Y17, N24 };
  Kind kind = Kind::None;
  double lambda = 0.0;
  Norm norm_p = Norm::L2;  // trivial_product only
  double scale = 1.0;      // 1/sqrt(num outputs) for p=1, 1/sqrt(num inputs) for p=inf

  static Kind kind_from_string(const std::string& s);
  static std::string kind_to_string(Kind k);
};

// Numerically stable cross entropy; gradient w.r.t. logits is
// softmax(logits) - onehot(label).
std::pair<double, Vec> cross_entropy(const Vec& logits, int label);

struct PenaltyResult {
  double value = 0.0;           // unweighted (lambda not applied), scale applied
  std::vector<Matrix> grads;    // one per layer, aligned with net.layers
};

// Penalty value and per-layer weight gradients. `warm` optionally carries
// per-layer power-iteration vectors across calls (owned by the caller).
PenaltyResult penalty_value_and_grads(const Network& net, const PenaltySpec& spec,
                                      std::vector<Vec>* warm = nullptr);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::optional<Vec>> biases;
};

// Mean cross entropy over the index set plus lambda * penalty; gradients
// for every weight and bias. Deterministic for a fixed batch order.
double backprop(const Network& net, const Dataset& data, std::span<const std::size_t> batch,
                const PenaltySpec& spec, Gradients& out, std::vector<Vec>* warm = nullptr);

// COCOB-Backprop: parameter-free coin-betting updates with per-coordinate
// max-gradient, absolute-gradient sum, reward, and bet accumulators.
class Cocob {
 public:
  explicit Cocob(double alpha = 100.0) : alpha_(alpha) {}
  void init(std::span<const double> initial_params);
  void step(std::span<double> params, std::span<const double> grads);

 private:
  double alpha_;
  Vec initial_, max_grad_, grad_abs_sum_, reward_, bet_sum_;
};

class Adam {
 public:
  Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void init(std::size_t n);
  void step(std::span<double> params, std::span<const double> grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  Vec m_, v_;
  long t_ = 0;
};

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 60;
  std::string optimizer = "cocob";  // "cocob" | "adam"
  double cocob_alpha = 100.0;
  double adam_lr = 1e-3;
  std::uint64_t seed = 0;
  PenaltySpec penalty;
  std::size_t eval_every = 1;  // full train/test evaluation cadence, in epochs
  bool verbose = false;        // per-epoch progress lines on stderr
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double test_nll = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double trivial_k = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;  // epoch 0 baseline + one per epoch
  std::string to_csv() const;        // header: epoch,train_nll,test_nll,train_acc,test_acc,K,seconds
};

struct EvalMetrics {
  double nll = 0.0;
  double accuracy = 0.0;
};

EvalMetrics evaluate(const Network& net, const Dataset& data);

// Minibatch training of the penalized objective. Throws
// std::invalid_argument on a bad config; numeric failures are reported with
// epoch/batch context.
std::pair<Network, TrainHistory> train(Network net, const Dataset& train_data,
                                       const Dataset& test_data, const TrainConfig& config);

}  // namespace lipnn

#endif  // LIPNN_TRAINING_HPP
