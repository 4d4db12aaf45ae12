#include "lipnn/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lipnn/training.hpp"

namespace lipnn {

namespace {

int predict(const Vec& logits) {
  std::size_t argmax = 0;
  for (std::size_t j = 1; j < logits.size(); ++j)
    if (logits[j] > logits[argmax]) argmax = j;
  return static_cast<int>(argmax);
}

double margin(const Vec& logits, int label) {
  double best_other = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (static_cast<int>(j) != label) best_other = std::max(best_other, logits[j]);
  return logits[static_cast<std::size_t>(label)] - best_other;
}

}  // namespace

Vec pgd_l2(const Network& net, const Vec& x, int label, double epsilon, std::size_t steps) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  const double step_size = epsilon / 10.0;

  Vec current = x;
  Vec best = x;
  double best_loss = cross_entropy(forward(net, x), label).first;

  for (std::size_t t = 0; t < steps; ++t) {
    const ForwardTrace trace = forward_trace(net, current);
    const auto [loss, dlogits] = cross_entropy(trace.logits, label);
    Vec g = input_gradient(net, trace, dlogits);
    const double gnorm = vec_norm(g, Norm::L2);
    if (gnorm == 0.0) continue;  // keep the iterate
    for (std::size_t i = 0; i < g.size(); ++i) current[i] += step_size * g[i] / gnorm;
    // Project onto the epsilon-ball around the clean input.
    Vec delta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) delta[i] = current[i] - x[i];
    const double dnorm = vec_norm(delta, Norm::L2);
    if (dnorm > epsilon)
      for (std::size_t i = 0; i < x.size(); ++i) current[i] = x[i] + delta[i] * (epsilon / dnorm);
    const double cur_loss = cross_entropy(forward(net, current), label).first;
    if (cur_loss > best_loss) {
      best_loss = cur_loss;
      best = current;
    }
  }
  return best;
}

double certified_error(const Network& net, const Dataset& data, double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");
  const double k2 = trivial_bound(net, Norm::L2);
  const double threshold = std::sqrt(2.0) * k2 * epsilon;
  std::size_t robust = 0;
  Vec x(data.dims());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::copy(data.features.row(i), data.features.row(i) + data.dims(), x.begin());
    const Vec logits = forward(net, x);
    if (predict(logits) == data.labels[i] && margin(logits, data.labels[i]) > threshold) ++robust;
  }
  return 100.0 * (1.0 - static_cast<double>(robust) / static_cast<double>(data.size()));
}

AttackReport attack_sweep(const Network& net, const Dataset& data,
                          const std::vector<double>& epsilons) {
  AttackReport report;
  report.epsilons = epsilons;

  const std::size_t n = data.size();
  std::vector<int> clean_pred(n);
  Vec x(data.dims());
  std::size_t clean_wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(data.features.row(i), data.features.row(i) + data.dims(), x.begin());
    clean_pred[i] = predict(forward(net, x));
    clean_wrong += (clean_pred[i] != data.labels[i]);
  }
  report.clean_error_pct = 100.0 * static_cast<double>(clean_wrong) / static_cast<double>(n);

  for (double eps : epsilons) {
    std::vector<unsigned char> wrong(n, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      if (clean_pred[i] != data.labels[i]) {
        wrong[i] = 1;
        continue;
      }
      Vec xi(data.dims());
      std::copy(data.features.row(i), data.features.row(i) + data.dims(), xi.begin());
      const Vec adv = pgd_l2(net, xi, data.labels[i], eps);
      wrong[i] = (predict(forward(net, adv)) != data.labels[i]);
    }
    std::size_t count = 0;
    for (unsigned char w : wrong) count += w;
    report.empirical_error_pct.push_back(100.0 * static_cast<double>(count) /
                                         static_cast<double>(n));
    report.certified_error_pct.push_back(certified_error(net, data, eps));
  }
  return report;
}

std::string AttackReport::to_csv() const {
  std::ostringstream os;
  os << "epsilon,empirical_error_pct,certified_error_pct\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "0,%.17g,%.17g\n", clean_error_pct, clean_error_pct);
  os << buf;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", epsilons[i], empirical_error_pct[i],
                  certified_error_pct[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace lipnn
