#include "fedglb/glm.hpp"

#include <cmath>

#include "fedglb/errors.hpp"

namespace fedglb {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

GlmFamily GlmFamily::logistic(double s_radius) {
  if (!(s_radius > 0.0)) throw numeric_error("GlmFamily: S must be positive");
  GlmFamily f;
  f.link = LinkKind::logistic;
  f.s_radius = s_radius;
  const double sig = sigmoid(s_radius);  // mu' is even and unimodal: inf at the endpoint
  f.c_mu = sig * (1.0 - sig);
  f.k_mu = 0.25;
  f.r_max = 1.0;  // Bernoulli noise |y - mu| <= 1
  return f;
}

GlmFamily GlmFamily::identity(double s_radius, double r_max) {
  if (!(s_radius > 0.0)) throw numeric_error("GlmFamily: S must be positive");
  if (!(r_max > 0.0)) throw numeric_error("GlmFamily: R_max must be positive");
  GlmFamily f;
  f.link = LinkKind::identity;
  f.s_radius = s_radius;
  f.c_mu = 1.0;
  f.k_mu = 1.0;
  f.r_max = r_max;
  return f;
}

LipschitzConstants lipschitz_constants(LinkKind link, double s_radius, double r_max_config) {
  const GlmFamily f = link == LinkKind::logistic ? GlmFamily::logistic(s_radius)
                                                 : GlmFamily::identity(s_radius, r_max_config);
  return {f.c_mu, f.k_mu, f.r_max};
}

double GlmFamily::link_value(double z) const {
  if (!std::isfinite(z)) throw numeric_error("link_value: non-finite input");
  return link == LinkKind::logistic ? sigmoid(z) : z;
}

double GlmFamily::link_slope(double z) const {
  if (!std::isfinite(z)) throw numeric_error("link_slope: non-finite input");
  if (link == LinkKind::identity) return 1.0;
  const double s = sigmoid(z);
  return s * (1.0 - s);
}

double GlmFamily::log_partition(double z) const {
  if (!std::isfinite(z)) throw numeric_error("log_partition: non-finite input");
  if (link == LinkKind::identity) return 0.5 * z * z;
  // log(1 + e^z) = max(z, 0) + log1p(e^{-|z|}), stable past |z| ~ 30
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void GlmFamily::check_support(double y) const {
  if (!std::isfinite(y)) throw numeric_error("reward outside support: non-finite");
  if (link == LinkKind::logistic && y != 0.0 && y != 1.0)
    throw numeric_error("reward outside support: logistic family expects y in {0,1}");
}

double GlmFamily::loss(double z, double y) const {
  check_support(y);
  return -y * z + log_partition(z);
}

Eigen::VectorXd GlmFamily::loss_gradient(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& theta, double y) const {
  if (!x.allFinite() || !theta.allFinite())
    throw numeric_error("loss_gradient: non-finite input");
  check_support(y);
  return x * (link_value(x.dot(theta)) - y);
}

double GlmFamily::pred_error_bound() const {
  return std::sqrt(k_mu * k_mu * s_radius * s_radius + r_max * r_max);
}

void ClientData::append(const Eigen::VectorXd& x, double y) {
  const int d = static_cast<int>(x.size());
  if (n_ == 0 && xs_.rows() == 0) {
    xs_.resize(64, d);
    ys_.resize(64);
  }
  if (xs_.cols() != d) throw numeric_error("ClientData: inconsistent feature dimension");
  if (n_ == xs_.rows()) {
    Eigen::MatrixXd bigger(xs_.rows() * 2, d);
    bigger.topRows(n_) = xs_.topRows(n_);
    xs_.swap(bigger);
    Eigen::VectorXd bigger_y(ys_.size() * 2);
    bigger_y.head(n_) = ys_.head(n_);
    ys_.swap(bigger_y);
  }
  xs_.row(n_) = x.transpose();
  ys_(n_) = y;
  ++n_;
}

namespace {

Eigen::VectorXd link_values(const GlmFamily& fam, const Eigen::VectorXd& z) {
  if (fam.link == LinkKind::identity) return z;
  // vectorized stable sigmoid
  Eigen::ArrayXd a = z.array();
  Eigen::ArrayXd e = (-a.abs()).exp();
  Eigen::ArrayXd pos = 1.0 / (1.0 + e);
  Eigen::ArrayXd neg = e / (1.0 + e);
  return (a >= 0.0).select(pos, neg).matrix();
}

}  // namespace

double batch_objective(const GlmFamily& fam, const ClientData& data,
                       const Eigen::VectorXd& theta, double lambda, int num_clients) {
  const int t = data.size();
  if (t == 0) throw numeric_error("batch_objective: empty data");
  if (!(lambda > 0.0)) throw numeric_error("batch_objective: lambda must be positive");
  const Eigen::VectorXd z = data.features() * theta;
  double acc = 0.0;
  const auto& y = data.rewards();
  for (int s = 0; s < t; ++s) acc += fam.loss(z(s), y(s));
  return acc / t + lambda * theta.squaredNorm() / (2.0 * num_clients * t);
}

Eigen::VectorXd batch_gradient(const GlmFamily& fam, const ClientData& data,
                               const Eigen::VectorXd& theta, double lambda, int num_clients) {
  const int t = data.size();
  if (t == 0) throw numeric_error("batch_gradient: empty data");
  if (!(lambda > 0.0)) throw numeric_error("batch_gradient: lambda must be positive");
  Eigen::VectorXd g = raw_gradient_sum(fam, data, theta);
  g /= t;
  g.noalias() += (lambda / (static_cast<double>(num_clients) * t)) * theta;
  return g;
}

Eigen::VectorXd raw_gradient_sum(const GlmFamily& fam, const ClientData& data,
                                 const Eigen::VectorXd& theta) {
  if (data.size() == 0) return Eigen::VectorXd::Zero(theta.size());
  const Eigen::VectorXd z = data.features() * theta;
  const Eigen::VectorXd residual = link_values(fam, z) - data.rewards();
  return data.features().transpose() * residual;
}

}  // namespace fedglb
