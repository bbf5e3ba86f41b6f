#include "fedglb/numkern.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "fedglb/errors.hpp"

namespace fedglb {

SpdMatrix SpdMatrix::scaled_identity(int dim, double c) {
  if (dim < 1) throw numeric_error("SpdMatrix: dimension must be >= 1");
  if (!(c > 0.0) || !std::isfinite(c))
    throw numeric_error("SpdMatrix: identity scale must be positive and finite");
  SpdMatrix m(Eigen::MatrixXd(c * Eigen::MatrixXd::Identity(dim, dim)));
  return m;
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw numeric_error("SpdMatrix: matrix must be square");
  if (!m.allFinite()) throw numeric_error("SpdMatrix: non-finite entries");
  entries_ = 0.5 * (m + m.transpose());  // mirror to exact symmetry
  refresh();
}

void SpdMatrix::check_finite(const Eigen::VectorXd& x, const char* who) const {
  if (x.size() != entries_.rows())
    throw numeric_error(std::string(who) + ": vector dimension mismatch");
  if (!x.allFinite()) throw numeric_error(std::string(who) + ": non-finite input");
}

void SpdMatrix::refresh() {
  Eigen::LLT<Eigen::MatrixXd> llt(entries_);
  if (llt.info() != Eigen::Success)
    throw consistency_error("SpdMatrix: Cholesky factorization failed; matrix not SPD");
  const int d = dim();
  inverse_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
  inverse_ = 0.5 * (inverse_ + inverse_.transpose());
  logdet_ = 0.0;
  for (int k = 0; k < d; ++k) logdet_ += 2.0 * std::log(llt.matrixL()(k, k));
  updates_since_refresh_ = 0;
}

void SpdMatrix::rank_one_update(const Eigen::VectorXd& x) {
  check_finite(x, "rank_one_update");
  const Eigen::VectorXd ix = inverse_ * x;
  const double denom = 1.0 + x.dot(ix);
  if (!(denom > 0.0))
    throw consistency_error("rank_one_update: 1 + x^T M^{-1} x <= 0; inverse cache corrupted");
  entries_.selfadjointView<Eigen::Upper>().rankUpdate(x, 1.0);
  entries_.triangularView<Eigen::StrictlyLower>() = entries_.transpose();
  inverse_.noalias() -= (ix * ix.transpose()) / denom;
  inverse_ = 0.5 * (inverse_ + inverse_.transpose());
  logdet_ += std::log(denom);
  if (++updates_since_refresh_ >= kRefreshInterval) refresh();
}

void SpdMatrix::add_symmetric(const Eigen::MatrixXd& delta) {
  if (delta.rows() != entries_.rows() || delta.cols() != entries_.cols())
    throw numeric_error("add_symmetric: dimension mismatch");
  if (!delta.allFinite()) throw numeric_error("add_symmetric: non-finite entries");
  entries_ += 0.5 * (delta + delta.transpose());
  refresh();
}

double SpdMatrix::inv_quad_form(const Eigen::VectorXd& x) const {
  check_finite(x, "mahalanobis_norm");
  return x.dot(inverse_ * x);
}

double SpdMatrix::mahalanobis_norm(const Eigen::VectorXd& x) const {
  const double q = inv_quad_form(x);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

Eigen::VectorXd SpdMatrix::solve(const Eigen::VectorXd& v) const {
  check_finite(v, "solve");
  const double tol = 1e-8 * (1.0 + v.norm());
  Eigen::VectorXd x = inverse_ * v;
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd r = entries_ * x - v;
    if (r.norm() <= tol) return x;
    x.noalias() -= inverse_ * r;
  }
  // cached inverse too stale; fall back to a fresh factorization
  Eigen::LLT<Eigen::MatrixXd> llt(entries_);
  if (llt.info() != Eigen::Success)
    throw consistency_error("solve: Cholesky factorization failed; matrix not SPD");
  x = llt.solve(v);
  const Eigen::VectorXd r = entries_ * x - v;
  x.noalias() -= llt.solve(r);
  return x;
}

Eigen::VectorXd ball_projection(const Eigen::VectorXd& theta_prime, const SpdMatrix& m,
                                double radius) {
  if (!(radius > 0.0)) throw numeric_error("ball_projection: radius must be positive");
  if (!theta_prime.allFinite()) throw numeric_error("ball_projection: non-finite input");
  if (theta_prime.norm() <= radius) return theta_prime;  // interior point: fixed point

  const Eigen::MatrixXd& a = m.entries();
  const Eigen::VectorXd target = a * theta_prime;
  const int d = m.dim();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);

  const auto norm_at = [&](double nu) {
    Eigen::LLT<Eigen::MatrixXd> llt(a + nu * id);
    return llt.solve(target).norm();
  };

  // ||theta(nu)|| is strictly decreasing in nu; bracket from lambda_max upward
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  double nu_hi = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  int doublings = 0;
  while (norm_at(nu_hi) >= radius) {
    nu_hi *= 2.0;
    if (++doublings > 200)
      throw convergence_error("ball_projection: failed to bracket the radius constraint");
  }

  double nu_lo = 0.0;
  double nu = nu_hi;
  for (int iter = 0; iter < 200; ++iter) {
    nu = 0.5 * (nu_lo + nu_hi);
    const double n = norm_at(nu);
    if (std::abs(n - radius) <= 1e-10) break;
    if (n > radius) {
      nu_lo = nu;
    } else {
      nu_hi = nu;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a + nu * id);
  return llt.solve(target);
}

double logdet_ratio(const SpdMatrix& m_now, double logdet_snapshot) {
  const double diff = m_now.logdet() - logdet_snapshot;
  if (diff < -1e-9)
    throw consistency_error("logdet_ratio: negative log-determinant ratio " +
                            std::to_string(diff));
  return diff < 0.0 ? 0.0 : diff;
}

}  // namespace fedglb
