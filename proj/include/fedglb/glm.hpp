#pragma once

#include <Eigen/Dense>

namespace fedglb {

enum class LinkKind { logistic, identity };

// Inverse link mu, log-partition m, and the curvature/noise constants used by
// confidence widths and step sizes:
//   c_mu = inf_{|z| <= S} mu'(z),  k_mu = Lipschitz constant of mu,
//   r_max = bound on the reward noise |y - mu(x^T theta*)|.
struct GlmFamily {
  LinkKind link = LinkKind::logistic;
  double s_radius = 1.0;
  double c_mu = 0.0;
  double k_mu = 0.0;
  double r_max = 1.0;

  static GlmFamily logistic(double s_radius);
  static GlmFamily identity(double s_radius, double r_max);

  double link_value(double z) const;  // mu(z)
  double link_slope(double z) const;  // mu'(z)
  double log_partition(double z) const;  // m(z), overflow-safe
  double loss(double z, double y) const;  // -y z + m(z)

  // x * (mu(x^T theta) - y)
  Eigen::VectorXd loss_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                double y) const;

  // sqrt(k_mu^2 S^2 + r_max^2), a bound on |mu(x^T theta) - y| for in-ball
  // theta, unit x, supported y
  double pred_error_bound() const;

  void check_support(double y) const;
};

struct LipschitzConstants {
  double c_mu, k_mu, r_max;
};
LipschitzConstants lipschitz_constants(LinkKind link, double s_radius, double r_max_config);

// Growable per-client sample store, laid out for vectorized batch gradients.
class ClientData {
 public:
  void append(const Eigen::VectorXd& x, double y);
  int size() const { return n_; }
  // views over the filled prefix
  Eigen::Ref<const Eigen::MatrixXd> features() const { return xs_.topRows(n_); }
  Eigen::Ref<const Eigen::VectorXd> rewards() const { return ys_.head(n_); }
  void clear() { n_ = 0; }

 private:
  Eigen::MatrixXd xs_;  // capacity_ x d, rows 0..n_-1 valid
  Eigen::VectorXd ys_;
  int n_ = 0;
};

// Average regularized negative log-likelihood of one client holding t samples:
//   F_i(theta) = (1/t) sum_s l(x_s^T theta, y_s) + lambda/(2 N t) ||theta||^2.
// The server-side objective is the mean of F_i over the N clients, so that
// N t F(theta) is the plain lambda-regularized log-likelihood.
double batch_objective(const GlmFamily& fam, const ClientData& data,
                       const Eigen::VectorXd& theta, double lambda, int num_clients);

// grad F_i(theta) = (1/t) sum_s x_s (mu(x_s^T theta) - y_s) + lambda/(N t) theta
Eigen::VectorXd batch_gradient(const GlmFamily& fam, const ClientData& data,
                               const Eigen::VectorXd& theta, double lambda, int num_clients);

// sum_s x_s (mu(x_s^T theta) - y_s) over the given samples (no regularizer,
// no averaging); the building block shared by distributed gradient exchange
// and MLE refits.
Eigen::VectorXd raw_gradient_sum(const GlmFamily& fam, const ClientData& data,
                                 const Eigen::VectorXd& theta);

}  // namespace fedglb
