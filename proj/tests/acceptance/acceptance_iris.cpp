// Iris gate, full fidelity: width-4 sincos hidden layer, 20000 full-batch
// steps per lambda. Budget: < 5 min.

#include <cmath>

#include "lipnn/experiments.hpp"
#include "lipnn/verification.hpp"
#include "harness.hpp"

using namespace lipnn;
using acceptance::check;
using acceptance::fmt;

int main() {
  const auto [train_ds, test_ds] = load_iris();

  RunSpec spec;
  spec.hidden = {4};
  spec.activation = "sincos";
  spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
  spec.train_config.epochs = 20000;
  spec.train_config.batch_size = 120;  // full batch
  spec.train_config.eval_every = 100;

  // lambda = 1e-2: small and tight bound, accurate model.
  spec.penalty.lambda = 1e-2;
  const RunResult reg = run_training(spec, train_ds, test_ds, 0);
  const VerificationReport reg_report = verify(reg.net, train_ds, 20, 0);
  check(reg.final_test.accuracy >= 0.93,
        "criterion 1: lambda=1e-2 test accuracy >= 0.93",
        fmt("test acc = %.4f", reg.final_test.accuracy));
  check(reg_report.k_upper <= 10.0, "criterion 1: lambda=1e-2 K <= 10",
        fmt("K = %.4f", reg_report.k_upper));
  check(reg_report.tightness <= 1.1, "criterion 1: lambda=1e-2 tightness K/L_hat <= 1.1",
        fmt("K/L_hat = %.4f", reg_report.tightness));

  // lambda = 0: interpolation with an exploding bound.
  spec.penalty.lambda = 0.0;
  const RunResult unreg = run_training(spec, train_ds, test_ds, 0);
  const VerificationReport unreg_report = verify(unreg.net, train_ds, 20, 0);
  check(unreg_report.k_upper >= 50.0, "criterion 1: lambda=0 K >= 50",
        fmt("K = %.2f", unreg_report.k_upper));
  check(unreg.final_train.accuracy >= 0.99, "criterion 1: lambda=0 train accuracy >= 0.99",
        fmt("train acc = %.4f", unreg.final_train.accuracy));

  return acceptance::finish("iris");
}
