#include "fedglb/policy.hpp"

#include <cmath>
#include <string>

#include "fedglb/errors.hpp"

namespace fedglb {

int ucb_argmax(const RoundObservation& obs, const Eigen::VectorXd& theta_hat, double alpha,
               const SpdMatrix& metric) {
  if (obs.num_arms() < 1) throw protocol_error("ucb_argmax: empty arm set");
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < obs.num_arms(); ++a) {
    const Eigen::VectorXd x = obs.arm(a);
    const double score = x.dot(theta_hat) + alpha * metric.mahalanobis_norm(x);
    if (!std::isfinite(score))
      throw numeric_error("ucb_argmax: non-finite UCB score for arm " + std::to_string(a));
    if (score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

}  // namespace fedglb
