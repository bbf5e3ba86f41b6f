#pragma once

#include <Eigen/Dense>

namespace fedglb {

// Dense symmetric positive definite matrix with an incrementally maintained
// inverse and log-determinant. Rank-one updates use the Sherman-Morrison
// identity; after kRefreshInterval updates the caches are recomputed from a
// dense Cholesky factorization to bound drift.
class SpdMatrix {
 public:
  static constexpr int kRefreshInterval = 512;

  // c * I, c > 0
  static SpdMatrix scaled_identity(int dim, double c);

  // from a dense symmetric positive definite matrix (symmetrized on input)
  explicit SpdMatrix(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }
  double logdet() const { return logdet_; }

  // M <- M + x x^T. Inverse and logdet are maintained incrementally:
  //   inv' = inv - (inv x)(inv x)^T / (1 + x^T inv x)
  //   logdet' = logdet + log(1 + x^T inv x)
  void rank_one_update(const Eigen::VectorXd& x);

  // M <- M + delta for symmetric PSD delta (epoch aggregation);
  // caches are rebuilt from a dense factorization.
  void add_symmetric(const Eigen::MatrixXd& delta);

  // sqrt(x^T M^{-1} x); 0 iff x = 0
  double mahalanobis_norm(const Eigen::VectorXd& x) const;
  double inv_quad_form(const Eigen::VectorXd& x) const;  // x^T M^{-1} x

  // M^{-1} v with iterative refinement so that ||M r - v|| <= 1e-8 (1 + ||v||)
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;

  // recompute inverse and logdet from a dense Cholesky factorization
  void refresh();

 private:
  void check_finite(const Eigen::VectorXd& x, const char* who) const;

  Eigen::MatrixXd entries_;
  Eigen::MatrixXd inverse_;
  double logdet_ = 0.0;
  int updates_since_refresh_ = 0;
};

// argmin_{||theta|| <= radius} (theta - theta_prime)^T M (theta - theta_prime).
// Interior points are returned bitwise unchanged; otherwise the stationarity
// parameterization theta(nu) = (M + nu I)^{-1} M theta_prime is bisected on
// nu >= 0 until | ||theta(nu)|| - radius | <= 1e-10 (at most 200 iterations).
Eigen::VectorXd ball_projection(const Eigen::VectorXd& theta_prime, const SpdMatrix& m,
                                double radius);

// logdet(M_now) - logdet_snapshot, where the snapshot was taken from the same
// matrix earlier in its update history. Never negative beyond rounding; a
// deficit past -1e-9 signals corrupted bookkeeping.
double logdet_ratio(const SpdMatrix& m_now, double logdet_snapshot);

}  // namespace fedglb
