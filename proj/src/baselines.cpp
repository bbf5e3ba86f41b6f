#include "fedglb/baselines.hpp"

#include <cmath>
#include <string>

#include "fedglb/errors.hpp"

namespace fedglb {

DisLinUcbPolicy::DisLinUcbPolicy(DisLinUcbConfig cfg)
    : cfg_(cfg),
      a_server_(SpdMatrix::scaled_identity(cfg.dim, cfg.lambda)),
      b_server_(Eigen::VectorXd::Zero(cfg.dim)) {
  if (cfg_.num_clients < 1 || cfg_.dim < 1)
    throw config_error("DisLinUcbPolicy: N and d must be >= 1");
  Client proto{a_server_, b_server_, Eigen::MatrixXd::Zero(cfg.dim, cfg.dim),
               Eigen::VectorXd::Zero(cfg.dim), a_server_.logdet()};
  clients_.assign(cfg_.num_clients, proto);
}

double DisLinUcbPolicy::width(int i) const {
  const Client& c = clients_[i];
  const double n = static_cast<double>(c.samples);
  const double log_term =
      std::log((1.0 + n / (cfg_.dim * cfg_.lambda)) / cfg_.delta);
  const double base = cfg_.r_noise * std::sqrt(cfg_.dim * log_term) +
                      std::sqrt(cfg_.lambda) * cfg_.s_radius;
  return cfg_.alpha_mode == AlphaMode::practical ? cfg_.alpha_scale * base : base;
}

int DisLinUcbPolicy::select_arm(int /*t*/, int i, const RoundObservation& obs) {
  const Client& c = clients_[i];
  const Eigen::VectorXd theta_hat = c.A.solve(c.b);
  return ucb_argmax(obs, theta_hat, width(i), c.A);
}

void DisLinUcbPolicy::observe(int t, int i, const Eigen::VectorXd& x, double y) {
  Client& c = clients_[i];
  c.A.rank_one_update(x);
  c.delta_A.noalias() += x * x.transpose();
  c.b.noalias() += x * y;
  c.delta_b.noalias() += x * y;
  ++c.samples;
  const double value = (t - t_last_) * logdet_ratio(c.A, c.logdet_snapshot);
  if (value > cfg_.trigger_threshold) sync(t, i);
}

void DisLinUcbPolicy::sync(int t, int acting_client) {
  const int n = cfg_.num_clients;
  const int d = cfg_.dim;
  Eigen::MatrixXd sum_delta = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd sum_delta_b = Eigen::VectorXd::Zero(d);
  long long fresh = 0;
  for (auto& c : clients_) {
    sum_delta += c.delta_A;
    sum_delta_b += c.delta_b;
    fresh += c.samples - samples_server_;  // each client's additions since the last sync
  }
  a_server_.add_symmetric(sum_delta);
  b_server_ += sum_delta_b;
  samples_server_ += fresh;

  for (auto& c : clients_) {
    c.A = a_server_;
    c.b = b_server_;
    c.delta_A.setZero();
    c.delta_b.setZero();
    c.logdet_snapshot = a_server_.logdet();
    c.samples = samples_server_;
  }
  t_last_ = t;
  sync_log_.push_back({t, acting_client, 0});
  // deltas up, merged state down; matrices as d^2 scalars, vectors as d
  const long long per_msg = static_cast<long long>(d) * d + d;
  ledger_.record(MsgKind::stats_up, n, n * per_msg);
  ledger_.record(MsgKind::stats_down, n, n * per_msg);
}

namespace {

double mle_objective(const GlmFamily& fam, const ClientData& data,
                     const Eigen::VectorXd& theta, double lambda) {
  const Eigen::VectorXd z = data.features() * theta;
  double acc = 0.0;
  for (int s = 0; s < data.size(); ++s) acc += fam.loss(z(s), data.rewards()(s));
  return (acc + 0.5 * lambda * theta.squaredNorm()) / data.size();
}

Eigen::VectorXd mle_gradient(const GlmFamily& fam, const ClientData& data,
                             const Eigen::VectorXd& theta, double lambda) {
  return (raw_gradient_sum(fam, data, theta) + lambda * theta) / data.size();
}

Eigen::MatrixXd mle_hessian(const GlmFamily& fam, const ClientData& data,
                            const Eigen::VectorXd& theta, double lambda) {
  const int d = static_cast<int>(theta.size());
  const Eigen::VectorXd z = data.features() * theta;
  Eigen::VectorXd w(z.size());
  for (int s = 0; s < z.size(); ++s) w(s) = fam.link_slope(z(s));
  Eigen::MatrixXd h = lambda * Eigen::MatrixXd::Identity(d, d);
  h.noalias() +=
      data.features().transpose() * w.asDiagonal() * data.features();
  return h / data.size();
}

}  // namespace

FitOutcome ucb_glm_fit(MleState& state, const GlmFamily& fam, double lambda,
                       double s_radius) {
  const int n = state.data.size();
  if (n == 0) throw numeric_error("ucb_glm_fit: no samples to fit");
  if (state.theta.size() == 0)
    state.theta = Eigen::VectorXd::Zero(state.data.features().cols());

  FitOutcome out;
  Eigen::VectorXd theta = state.theta;  // warm start
  for (; out.iterations < state.newton_max_iter; ++out.iterations) {
    const Eigen::VectorXd g = mle_gradient(fam, state.data, theta, lambda);
    if (g.norm() <= state.newton_tol) break;
    const Eigen::MatrixXd h = mle_hessian(fam, state.data, theta, lambda);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    Eigen::VectorXd dir;
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(g);
    } else {
      out.gradient_fallback = true;
      dir = g / (fam.k_mu + lambda / n);
    }
    // backtracking on the Armijo condition; once the predicted decrease sinks
    // to the rounding noise of the summed objective, the full step is safe
    const double f0 = mle_objective(fam, state.data, theta, lambda);
    const double slope = g.dot(dir);
    const double noise = 1e-12 * (1.0 + std::abs(f0));
    double step = 1.0;
    if (slope > noise) {
      for (int bt = 0; bt < 40; ++bt) {
        if (mle_objective(fam, state.data, theta - step * dir, lambda) <=
            f0 - 1e-4 * step * slope + noise)
          break;
        step *= 0.5;
      }
    }
    theta -= step * dir;
  }

  const double gn = mle_gradient(fam, state.data, theta, lambda).norm();
  if (gn > state.newton_tol)
    throw consistency_error("ucb_glm_fit: refit stopped with gradient norm " +
                            std::to_string(gn));
  if (theta.norm() > s_radius) {
    const Eigen::MatrixXd h = mle_hessian(fam, state.data, theta, lambda);
    theta = ball_projection(theta, SpdMatrix(h), s_radius);
  }
  state.theta = theta;
  return out;
}

namespace {

// width over an A = (lambda/c_mu) I + sum x x^T covariance, with the
// optimization term dropped; alpha_scale applies in practical mode only
double glm_width(const UcbGlmConfig& cfg, long long samples) {
  const GlmFamily& fam = cfg.fam;
  const double c = fam.c_mu;
  const double log_term =
      cfg.dim * std::log(1.0 + static_cast<double>(samples) * c / (cfg.dim * cfg.lambda)) +
      2.0 * std::log(1.0 / cfg.delta);
  const double base = (fam.r_max / c) * std::sqrt(log_term) +
                      std::sqrt(cfg.lambda / c) * fam.s_radius;
  return cfg.alpha_mode == AlphaMode::practical ? cfg.alpha_scale * base : base;
}

}  // namespace

OneUcbGlmPolicy::OneUcbGlmPolicy(UcbGlmConfig cfg)
    : cfg_(std::move(cfg)),
      a_(SpdMatrix::scaled_identity(cfg_.dim, cfg_.lambda / cfg_.fam.c_mu)) {
  if (cfg_.num_clients < 1 || cfg_.dim < 1)
    throw config_error("OneUcbGlmPolicy: N and d must be >= 1");
  mle_.theta = Eigen::VectorXd::Zero(cfg_.dim);
  mle_.newton_tol = cfg_.newton_tol;
  mle_.newton_max_iter = cfg_.newton_max_iter;
}

int OneUcbGlmPolicy::select_arm(int /*t*/, int /*i*/, const RoundObservation& obs) {
  return ucb_argmax(obs, mle_.theta, glm_width(cfg_, samples_), a_);
}

void OneUcbGlmPolicy::observe(int /*t*/, int /*i*/, const Eigen::VectorXd& x, double y) {
  cfg_.fam.check_support(y);
  mle_.data.append(x, y);
  a_.rank_one_update(x);
  ++samples_;
}

void OneUcbGlmPolicy::end_round(int t) {
  if (t % cfg_.refit_every == 0 && mle_.data.size() > 0) {
    const FitOutcome fit = ucb_glm_fit(mle_, cfg_.fam, cfg_.lambda, cfg_.fam.s_radius);
    if (fit.gradient_fallback) ++diag_.newton_fallbacks;
  }
  // all-pairs sharing floor of a jointly learned model
  const long long n = cfg_.num_clients;
  ledger_.record(MsgKind::one_ucb_round, n * n, n * n * cfg_.dim);
}

NUcbGlmPolicy::NUcbGlmPolicy(UcbGlmConfig cfg)
    : cfg_(std::move(cfg)) {
  if (cfg_.num_clients < 1 || cfg_.dim < 1)
    throw config_error("NUcbGlmPolicy: N and d must be >= 1");
  Client proto{MleState{}, SpdMatrix::scaled_identity(cfg_.dim, cfg_.lambda / cfg_.fam.c_mu)};
  proto.mle.theta = Eigen::VectorXd::Zero(cfg_.dim);
  proto.mle.newton_tol = cfg_.newton_tol;
  proto.mle.newton_max_iter = cfg_.newton_max_iter;
  clients_.assign(cfg_.num_clients, proto);
}

int NUcbGlmPolicy::select_arm(int /*t*/, int i, const RoundObservation& obs) {
  const Client& c = clients_[i];
  return ucb_argmax(obs, c.mle.theta, glm_width(cfg_, c.samples), c.A);
}

void NUcbGlmPolicy::observe(int /*t*/, int i, const Eigen::VectorXd& x, double y) {
  cfg_.fam.check_support(y);
  Client& c = clients_[i];
  c.mle.data.append(x, y);
  c.A.rank_one_update(x);
  ++c.samples;
  const FitOutcome fit = ucb_glm_fit(c.mle, cfg_.fam, cfg_.lambda, cfg_.fam.s_radius);
  if (fit.gradient_fallback) ++diag_.newton_fallbacks;
}

}  // namespace fedglb
