#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lipnn/experiments.hpp"
#include "lipnn/verification.hpp"

using namespace lipnn;

TEST_CASE("build_initial_network shapes and norms") {
  RunSpec spec;
  spec.hidden = {6, 5};
  spec.activation = "sincos";
  const Network sincos_net = build_initial_network(spec, 7, 3, 1);
  REQUIRE(sincos_net.layers.size() == 3);
  CHECK(sincos_net.layers[0].weight.rows() == 6);
  CHECK(sincos_net.layers[0].weight.cols() == 7);
  CHECK(sincos_net.layers[1].weight.cols() == 12);  // sincos fan-out
  CHECK(sincos_net.layers[2].weight.rows() == 3);

  spec.activation = "tanh3";
  spec.norm_p = Norm::L1;
  const Network tanh_net = build_initial_network(spec, 7, 3, 1);
  CHECK(tanh_net.norm_p == Norm::L1);
  CHECK(tanh_net.layers[1].weight.cols() == 18);  // order-3 fan-out
  CHECK(tanh_net.layers[0].bias.has_value());
}

TEST_CASE("run_training trains the penalized objective on iris") {
  const auto [train_ds, test_ds] = load_iris();
  RunSpec spec;
  spec.hidden = {4};
  spec.activation = "sincos";
  spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
  spec.penalty.lambda = 1e-2;
  spec.train_config.epochs = 500;
  spec.train_config.batch_size = 120;
  spec.train_config.eval_every = 100;
  const RunResult res = run_training(spec, train_ds, test_ds, 3);
  REQUIRE(res.history.records.size() == 501);
  CHECK(res.final_train.accuracy > 0.9);

  // The penalty keeps K far below the unpenalized counterfactual.
  RunSpec free_spec = spec;
  free_spec.penalty.lambda = 0.0;
  const RunResult free_run = run_training(free_spec, train_ds, test_ds, 3);
  CHECK(res.history.records.back().trivial_k <
        0.5 * free_run.history.records.back().trivial_k);
}

TEST_CASE("w23 route respects the fixed bound while learning") {
  const auto [train_ds, test_ds] = load_iris();
  RunSpec spec;
  spec.hidden = {8};
  spec.activation = "abs";
  spec.w23 = true;
  spec.w23_bound = 0.1;
  spec.train_config.epochs = 400;
  spec.train_config.batch_size = 120;
  spec.train_config.eval_every = 100;
  const RunResult res = run_training(spec, train_ds, test_ds, 0);

  // Hard bound holds at every recorded epoch (the parameterization is
  // norm-contractive; the builder would renormalize and flag otherwise).
  for (const EpochRecord& r : res.history.records) CHECK(r.trivial_k <= 0.1 * (1.0 + 1e-6));
  CHECK_FALSE(res.w23_normalization_applied);
  CHECK(trivial_bound(res.net, Norm::L2) <= 0.1 * (1.0 + 1e-6));

  // It actually learns despite the tiny Lipschitz budget.
  CHECK(res.final_train.accuracy > 0.7);
  CHECK(res.history.records.back().train_nll < res.history.records.front().train_nll);

  // The relu variant trains too (the W23 comparison row).
  spec.activation = "relu";
  spec.train_config.epochs = 200;
  const RunResult relu_res = run_training(spec, train_ds, test_ds, 0);
  CHECK(trivial_bound(relu_res.net, Norm::L2) <= 0.1 * (1.0 + 1e-6));
  CHECK(relu_res.history.records.back().train_nll < relu_res.history.records.front().train_nll);
}

TEST_CASE("w23 training is deterministic") {
  const auto [train_ds, test_ds] = load_iris();
  RunSpec spec;
  spec.hidden = {4};
  spec.activation = "abs";
  spec.w23 = true;
  spec.train_config.epochs = 50;
  spec.train_config.batch_size = 60;
  const RunResult a = run_training(spec, train_ds, test_ds, 9);
  const RunResult b = run_training(spec, train_ds, test_ds, 9);
  for (std::size_t l = 0; l < a.net.layers.size(); ++l)
    CHECK(a.net.layers[l].weight.data() == b.net.layers[l].weight.data());
}
