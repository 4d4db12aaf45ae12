#ifndef LIPNN_ROBUSTNESS_HPP
#define LIPNN_ROBUSTNESS_HPP

#include <string>
#include <vector>

#include "lipnn/data.hpp"
#include "lipnn/network.hpp"

namespace lipnn {

// l2 PGD: 40 ascent steps on the cross-entropy gradient, each normalized to
// length epsilon/10 and projected back onto the epsilon-ball around the
// clean input. Starts at the clean input; returns the iterate with the
// highest loss. A zero-gradient step keeps the current iterate.
Vec pgd_l2(const Network& net, const Vec& x, int label, double epsilon, std::size_t steps = 40);

// A point is certifiably robust at radius epsilon iff it is correctly
// classified and margin(x) > sqrt(2) * K_2 * epsilon with K_2 the 2-norm
// trivial bound (used regardless of the training norm; the attack is l2).
// Returns the certified error percentage.
double certified_error(const Network& net, const Dataset& data, double epsilon);

struct AttackReport {
  double clean_error_pct = 0.0;
  std::vector<double> epsilons;
  std::vector<double> empirical_error_pct;
  std::vector<double> certified_error_pct;

  // CSV: epsilon,empirical_error_pct,certified_error_pct with a leading
  // epsilon = 0 row carrying the clean error.
  std::string to_csv() const;
};

// Empirical (PGD) and certified error rates over the test set for each
// budget. A sample counts as an empirical error when the clean or attacked
// prediction is wrong, so attacks never help.
AttackReport attack_sweep(const Network& net, const Dataset& data,
                          const std::vector<double>& epsilons);

}  // namespace lipnn

#endif  // LIPNN_ROBUSTNESS_HPP
