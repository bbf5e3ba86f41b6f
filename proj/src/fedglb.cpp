#include "fedglb/fedglb.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fedglb/errors.hpp"

namespace fedglb {

double EpsRule::value(int num_clients, int t) const {
  if (t < 1 || num_clients < 1) throw numeric_error("EpsRule: N and t must be >= 1");
  if (kind == Kind::constant) return constant;
  const double nt = static_cast<double>(num_clients) * t;
  return 1.0 / (nt * nt);
}

SyncSchedule SyncSchedule::event_trigger(double d_threshold) {
  if (!(d_threshold >= 0.0)) throw config_error("SyncSchedule: D must be nonnegative");
  SyncSchedule s;
  s.kind = Kind::event_trigger;
  s.threshold = d_threshold;
  return s;
}

SyncSchedule SyncSchedule::fixed(int num_updates, int horizon, int num_clients) {
  if (num_updates < 1 || num_updates > horizon)
    throw config_error("SyncSchedule: B must be in [1, T]");
  SyncSchedule s;
  s.kind = Kind::fixed;
  s.num_updates = num_updates;
  const int gap = horizon / num_updates;
  for (int q = 1; q <= num_updates; ++q) s.points.insert({q * gap, num_clients - 1});
  return s;
}

SyncSchedule SyncSchedule::explicit_points(std::vector<std::pair<int, int>> positions) {
  SyncSchedule s;
  s.kind = Kind::fixed;
  s.num_updates = static_cast<int>(positions.size());
  s.points.insert(positions.begin(), positions.end());
  return s;
}

double default_trigger_threshold(int horizon, int num_clients, int dim) {
  const double nt = static_cast<double>(num_clients) * horizon;
  return horizon / (static_cast<double>(num_clients) * dim * std::log(nt));
}

int agd_budget(int t, int num_clients, double lambda, const GlmFamily& fam, double eps_t,
               int j_max, bool* clamped) {
  if (t < 1 || num_clients < 1) throw numeric_error("agd_budget: N and t must be >= 1");
  if (!(eps_t > 0.0)) throw numeric_error("agd_budget: eps must be positive");
  if (j_max < 1) throw numeric_error("agd_budget: j_max must be >= 1");
  if (clamped) *clamped = false;
  const double nt = static_cast<double>(num_clients) * t;
  const double kappa = fam.k_mu * nt / lambda + 1.0;
  const double smooth = fam.k_mu + 2.0 * lambda / nt;
  const double diam_sq = 4.0 * fam.s_radius * fam.s_radius;
  const double arg = smooth * diam_sq / (2.0 * eps_t);
  double raw = 1.0;
  if (arg > 1.0) raw = 1.0 + std::sqrt(kappa) * std::log(arg);
  if (raw > static_cast<double>(j_max)) {
    if (clamped) *clamped = true;
    return j_max;
  }
  const int j = static_cast<int>(std::ceil(raw));
  return j < 1 ? 1 : j;
}

AgdOutcome agd_update(const std::vector<const ClientData*>& client_data,
                      const GlmFamily& fam, double lambda,
                      const Eigen::VectorXd& theta_init, int iterations, double s_radius) {
  long long m = 0;
  for (const auto* cd : client_data) m += cd->size();
  AgdOutcome out;
  out.theta = theta_init;
  out.iterate = theta_init;
  if (m == 0 || iterations < 1) return out;

  const double step = 1.0 / (fam.k_mu + lambda / static_cast<double>(m));
  Eigen::VectorXd theta = theta_init;
  Eigen::VectorXd momentum_prev = theta_init;  // vartheta^{(1)}
  double upsilon = 1.0;                        // upsilon_1
  for (int j = 1; j <= iterations; ++j) {
    Eigen::VectorXd grad = lambda * theta;
    for (const auto* cd : client_data) grad.noalias() += raw_gradient_sum(fam, *cd, theta);
    grad /= static_cast<double>(m);
    const Eigen::VectorXd momentum_new = theta - step * grad;
    const double upsilon_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * upsilon * upsilon));
    const double gamma_j = (1.0 - upsilon) / upsilon_next;
    theta = (1.0 - gamma_j) * momentum_new + gamma_j * momentum_prev;
    if (!theta.allFinite())
      throw numeric_error("agd_update: non-finite iterate at step " + std::to_string(j) +
                          " (gradient norm " + std::to_string(grad.norm()) + ")");
    momentum_prev = momentum_new;
    upsilon = upsilon_next;
  }
  out.iterate = theta;
  const double n = theta.norm();
  if (n > s_radius) {
    out.radially_scaled = true;
    theta *= s_radius / n;
  }
  out.theta = theta;
  return out;
}

FedGlbPolicy::FedGlbPolicy(FedGlbConfig cfg)
    : cfg_(std::move(cfg)),
      server_{Eigen::VectorXd::Zero(cfg_.dim),
              SpdMatrix::scaled_identity(cfg_.dim, cfg_.lambda / cfg_.fam.c_mu),
              Eigen::VectorXd::Zero(cfg_.dim)} {
  if (cfg_.num_clients < 1 || cfg_.dim < 1)
    throw config_error("FedGlbPolicy: N and d must be >= 1");
  if (!(cfg_.lambda > 0.0)) throw config_error("FedGlbPolicy: lambda must be positive");
  if (!(cfg_.delta > 0.0 && cfg_.delta < 1.0))
    throw config_error("FedGlbPolicy: delta must be in (0,1)");
  ClientState proto{Eigen::VectorXd::Zero(cfg_.dim), server_.A,
                    Eigen::MatrixXd::Zero(cfg_.dim, cfg_.dim),
                    Eigen::VectorXd::Zero(cfg_.dim), server_.A.logdet(),
                    0.0, 0.0, 0, {}};
  clients_.assign(cfg_.num_clients, proto);
}

void FedGlbPolicy::enforce_ball(const Eigen::VectorXd& theta) const {
  if (theta.norm() > cfg_.fam.s_radius + 1e-9)
    throw consistency_error("model left the S-ball: ||theta|| = " +
                            std::to_string(theta.norm()));
}

double FedGlbPolicy::trigger_value(int i) const {
  const ClientState& c = clients_[i];
  return c.epoch_step_count * logdet_ratio(c.A, c.logdet_snapshot);
}

bool FedGlbPolicy::check_trigger(int i) const {
  return trigger_value(i) >= cfg_.schedule.threshold;
}

int FedGlbPolicy::select_arm(int t, int i, const RoundObservation& obs) {
  const ClientState& c = clients_[i];
  const Eigen::VectorXd theta_hat = c.A.solve(c.b);
  const ConfidenceBreakdown conf = confidence(i, t, theta_hat);
  if (conf.clamped) ++diag_.alpha_clamps;
  return ucb_argmax(obs, theta_hat, conf.alpha, c.A);
}

void FedGlbPolicy::observe(int t, int i, const Eigen::VectorXd& x, double y) {
  cfg_.fam.check_support(y);
  ClientState& c = clients_[i];
  c.data.append(x, y);
  c.A.rank_one_update(x);
  c.delta_A.noalias() += x * x.transpose();
  c.epoch_step_count = t - server_.t_last;
  const bool fire = cfg_.schedule.kind == SyncSchedule::Kind::event_trigger
                        ? check_trigger(i)
                        : cfg_.schedule.scheduled_at(t, i);
  if (!fire) {
    ons_local_update(c, x, y);
  } else {
    // this sample enters through delta_A and the refreshed b; no local step
    global_update(t, i);
  }
}

void FedGlbPolicy::ons_local_update(ClientState& c, const Eigen::VectorXd& x, double y) {
  const double z = x.dot(c.theta);
  c.b.noalias() += x * z;
  c.z_sq_sum += z * z;
  const Eigen::VectorXd g = cfg_.fam.loss_gradient(x, c.theta, y);
  c.grad_norm_sum += c.A.inv_quad_form(g);
  const Eigen::VectorXd theta_prime = c.theta - c.A.solve(g) / cfg_.fam.c_mu;
  c.theta = ball_projection(theta_prime, c.A, cfg_.fam.s_radius);
  enforce_ball(c.theta);
}

void FedGlbPolicy::global_update(int t, int acting_client,
                                 std::optional<int> forced_iterations) {
  const int n = cfg_.num_clients;
  const int d = cfg_.dim;

  Eigen::MatrixXd sum_delta = Eigen::MatrixXd::Zero(d, d);
  for (const auto& c : clients_) sum_delta += c.delta_A;
  server_.A.add_symmetric(sum_delta);

  const double eps_t = cfg_.eps_rule.value(n, t);
  bool clamped = false;
  const int j = forced_iterations
                    ? *forced_iterations
                    : agd_budget(t, n, cfg_.lambda, cfg_.fam, eps_t, cfg_.j_max, &clamped);
  if (clamped) ++diag_.budget_clamps;

  std::vector<const ClientData*> data;
  data.reserve(n);
  for (const auto& c : clients_) data.push_back(&c.data);
  AgdOutcome out =
      agd_update(data, cfg_.fam, cfg_.lambda, server_.theta, j, cfg_.fam.s_radius);
  if (out.radially_scaled) ++diag_.radial_scalings;
  server_.theta = out.theta;
  enforce_ball(server_.theta);

  // predicted-reward statistics for the epoch's samples, under the new model
  server_.b.noalias() += sum_delta * server_.theta;
  server_.z_sq_global += server_.theta.dot(sum_delta * server_.theta);

  // running log det(I + all pre-sync contexts)
  {
    Eigen::MatrixXd unit_gram = server_.A.entries();
    unit_gram.diagonal().array() += 1.0 - cfg_.lambda / cfg_.fam.c_mu;
    Eigen::LLT<Eigen::MatrixXd> llt(unit_gram);
    if (llt.info() != Eigen::Success)
      throw consistency_error("global_update: unit-gram factorization failed");
    double ld = 0.0;
    for (int k = 0; k < d; ++k) ld += 2.0 * std::log(llt.matrixL()(k, k));
    server_.logdet_unit_gram = ld;
  }

  for (auto& c : clients_) {
    c.theta = server_.theta;
    c.A = server_.A;
    c.b = server_.b;
    c.delta_A.setZero();
    c.logdet_snapshot = server_.A.logdet();
    c.grad_norm_sum = 0.0;
    c.z_sq_sum = 0.0;
    c.epoch_step_count = 0;
  }
  server_.t_last = t;
  server_.eps_last = eps_t;
  sync_log_.push_back({t, acting_client, j});

  ledger_.record(MsgKind::delta_A_up, n, static_cast<long long>(n) * d * d);
  ledger_.record(MsgKind::gradient_up, static_cast<long long>(n) * j,
                 2LL * n * d * j);
  ledger_.record(MsgKind::sync_down, n,
                 static_cast<long long>(n) * (static_cast<long long>(d) * d + 2 * d));
}

ConfidenceBreakdown FedGlbPolicy::confidence(int i, int t,
                                             const Eigen::VectorXd& theta_hat) const {
  const GlmFamily& fam = cfg_.fam;
  const double c = fam.c_mu;
  const double k = fam.k_mu;
  const double r = fam.r_max;
  const double s = fam.s_radius;
  const double lambda = cfg_.lambda;
  const double delta = cfg_.delta;
  const int d = cfg_.dim;
  const int n = cfg_.num_clients;

  ConfidenceBreakdown out;
  if (cfg_.alpha_mode == AlphaMode::practical) {
    const double log_term =
        d * std::log(1.0 + n * static_cast<double>(t) * c / (d * lambda)) +
        2.0 * std::log(1.0 / delta);
    out.alpha = cfg_.alpha_scale * ((r / c) * std::sqrt(log_term) + std::sqrt(lambda / c) * s);
    return out;
  }

  const ClientState& cl = clients_[i];
  const int t_last = server_.t_last;
  const double nt_last = static_cast<double>(n) * t_last;

  out.b1 = (t_last > 0 ? nt_last * server_.eps_last : 0.0) + 0.5 * lambda * s * s;

  const double log_term = d * std::log(1.0 + nt_last * c / (d * lambda)) +
                          2.0 * std::log(1.0 / delta);
  double mid = 0.0;
  if (t_last > 0)
    mid = 2.0 * nt_last * std::sqrt(2.0 * k / (lambda * c) + 2.0 / (nt_last * c)) *
          std::sqrt(server_.eps_last);
  const double bracket = (r / c) * std::sqrt(log_term) + mid + std::sqrt(lambda / c) * s;
  out.b2 = cl.grad_norm_sum / (2.0 * c) + 0.5 * c * bracket * bracket;

  const double big_l = std::log(1.0 / delta) + 0.5 * server_.logdet_unit_gram;
  const double r4 = r * r * r * r;
  const double c4 = c * c * c * c;
  out.beta = (8.0 * r * r / (c * c)) * big_l + out.b1 +
             (4.0 * r / c) * std::sqrt(2.0 * big_l) *
                 (server_.theta.norm() + s + std::sqrt(out.b1)) +
             4.0 * out.b2 / c +
             (8.0 * r * r / (c * c)) *
                 std::log((n / delta) *
                          std::sqrt(4.0 + 8.0 * out.b2 / c +
                                    64.0 * r4 / (4.0 * c4 * delta * delta))) +
             1.0;

  double alpha_sq = out.beta + (lambda / c) * s * s -
                    (server_.z_sq_global + cl.z_sq_sum) + theta_hat.dot(cl.b);
  if (alpha_sq < 0.0) {
    out.clamped = true;
    alpha_sq = 0.0;
  }
  out.alpha = std::sqrt(alpha_sq);
  return out;
}

Variant1Policy::Variant1Policy(FedGlbConfig cfg)
    : cfg_(std::move(cfg)),
      theta_(Eigen::VectorXd::Zero(cfg_.dim)),
      a_(SpdMatrix::scaled_identity(cfg_.dim, cfg_.lambda / cfg_.fam.c_mu)),
      data_(cfg_.num_clients) {
  if (cfg_.schedule.kind != SyncSchedule::Kind::fixed)
    throw config_error("Variant1Policy: needs a fixed communication schedule");
}

double Variant1Policy::width(int /*t*/) const {
  const GlmFamily& fam = cfg_.fam;
  const double c = fam.c_mu;
  const double r = fam.r_max;
  const double s = fam.s_radius;
  const double lambda = cfg_.lambda;
  const int d = cfg_.dim;
  const int n = cfg_.num_clients;
  const double nt = static_cast<double>(n) * t_last_;
  const double log_term = d * std::log(1.0 + nt * c / (d * lambda)) +
                          2.0 * std::log(1.0 / cfg_.delta);
  const double base = (r / c) * std::sqrt(log_term) + std::sqrt(lambda / c) * s;
  if (cfg_.alpha_mode == AlphaMode::practical) return cfg_.alpha_scale * base;
  double opt_term = 0.0;
  if (t_last_ > 0) {
    const double eps = cfg_.eps_rule.value(n, t_last_);
    opt_term = nt * std::sqrt(2.0 * fam.k_mu / (lambda * c) + 2.0 / (nt * c)) * std::sqrt(eps);
  }
  return opt_term + base;
}

int Variant1Policy::select_arm(int t, int /*i*/, const RoundObservation& obs) {
  return ucb_argmax(obs, theta_, width(t), a_);
}

void Variant1Policy::observe(int t, int i, const Eigen::VectorXd& x, double y) {
  cfg_.fam.check_support(y);
  data_[i].append(x, y);
  if (cfg_.schedule.scheduled_at(t, i)) global_update(t, i);
}

void Variant1Policy::global_update(int t, int acting_client) {
  const int n = cfg_.num_clients;
  const int d = cfg_.dim;

  Eigen::MatrixXd gram =
      (cfg_.lambda / cfg_.fam.c_mu) * Eigen::MatrixXd::Identity(d, d);
  for (const auto& cd : data_)
    if (cd.size() > 0) gram.noalias() += cd.features().transpose() * cd.features();
  a_ = SpdMatrix(gram);

  const double eps_t = cfg_.eps_rule.value(n, t);
  bool clamped = false;
  const int j = agd_budget(t, n, cfg_.lambda, cfg_.fam, eps_t, cfg_.j_max, &clamped);
  if (clamped) ++diag_.budget_clamps;

  std::vector<const ClientData*> data;
  data.reserve(n);
  for (const auto& cd : data_) data.push_back(&cd);
  AgdOutcome out = agd_update(data, cfg_.fam, cfg_.lambda, theta_, j, cfg_.fam.s_radius);
  if (out.radially_scaled) ++diag_.radial_scalings;
  theta_ = out.theta;

  t_last_ = t;
  sync_log_.push_back({t, acting_client, j});
  ledger_.record(MsgKind::stats_up, n, static_cast<long long>(n) * d * d);
  ledger_.record(MsgKind::gradient_up, static_cast<long long>(n) * j, 2LL * n * d * j);
  ledger_.record(MsgKind::sync_down, n,
                 static_cast<long long>(n) * (static_cast<long long>(d) * d + d));
}

double variant3_learning_rate(const GlmFamily& fam, int num_clients, int horizon,
                              int num_updates) {
  if (num_updates < 1) throw config_error("variant3_learning_rate: B must be >= 1");
  const double g = fam.pred_error_bound();
  const long long max_batch =
      (static_cast<long long>(num_clients) * horizon + num_updates - 1) / num_updates;
  return 0.5 * std::min(1.0 / (4.0 * fam.s_radius * g),
                        fam.c_mu / (g * g * static_cast<double>(max_batch)));
}

Variant3Policy::Variant3Policy(Variant3Config cfg)
    : cfg_(std::move(cfg)),
      gamma_(variant3_learning_rate(cfg_.fam, cfg_.num_clients, cfg_.horizon,
                                    std::max(1, cfg_.schedule.num_updates))),
      theta_g_(Eigen::VectorXd::Zero(cfg_.dim)),
      a_grad_g_(SpdMatrix::scaled_identity(cfg_.dim, cfg_.lambda)),
      v_g_(SpdMatrix::scaled_identity(cfg_.dim, cfg_.lambda)),
      b_g_(Eigen::VectorXd::Zero(cfg_.dim)) {
  if (cfg_.schedule.kind != SyncSchedule::Kind::fixed)
    throw config_error("Variant3Policy: needs a fixed communication schedule");
  Client proto{theta_g_, a_grad_g_, v_g_, b_g_, 0.0, 0.0, {}};
  clients_.assign(cfg_.num_clients, proto);
}

double Variant3Policy::width(int i, int t, const Eigen::VectorXd& theta_hat,
                             bool* clamped) const {
  const GlmFamily& fam = cfg_.fam;
  const double c = fam.c_mu;
  const double r = fam.r_max;
  const double s = fam.s_radius;
  const double lambda = cfg_.lambda;
  if (clamped) *clamped = false;
  if (cfg_.alpha_mode == AlphaMode::practical) {
    const double log_term =
        cfg_.dim * std::log(1.0 + cfg_.num_clients * static_cast<double>(t) /
                                      (cfg_.dim * lambda)) +
        2.0 * std::log(1.0 / cfg_.delta);
    return cfg_.alpha_scale * ((r / c) * std::sqrt(log_term) + std::sqrt(lambda) * s);
  }
  const Client& cl = clients_[i];
  const double bp =
      (bp_grad_global_ + cl.bp_grad_sum) / (2.0 * gamma_) + 2.0 * gamma_ * lambda * s * s;
  const double r4 = r * r * r * r;
  const double c4 = c * c * c * c;
  double alpha_sq =
      lambda * s * s + 1.0 + 4.0 * bp / c +
      (8.0 * r * r / (c * c)) *
          std::log((cfg_.num_clients / cfg_.delta) *
                   std::sqrt(4.0 + 8.0 * bp / c +
                             64.0 * r4 / (4.0 * c4 * cfg_.delta * cfg_.delta))) -
      (z_sq_global_ + cl.z_sq_sum) + theta_hat.dot(cl.b);
  if (alpha_sq < 0.0) {
    if (clamped) *clamped = true;
    alpha_sq = 0.0;
  }
  return std::sqrt(alpha_sq);
}

int Variant3Policy::select_arm(int t, int i, const RoundObservation& obs) {
  const Client& cl = clients_[i];
  const Eigen::VectorXd theta_hat = cl.v.solve(cl.b);
  bool clamped = false;
  const double alpha = width(i, t, theta_hat, &clamped);
  if (clamped) ++diag_.alpha_clamps;
  return ucb_argmax(obs, theta_hat, alpha, cl.v);
}

void Variant3Policy::observe(int t, int i, const Eigen::VectorXd& x, double y) {
  cfg_.fam.check_support(y);
  Client& cl = clients_[i];
  const double z = x.dot(cl.theta);
  const Eigen::VectorXd g = cfg_.fam.loss_gradient(x, cl.theta, y);
  cl.a_grad.rank_one_update(g);
  cl.v.rank_one_update(x);
  cl.epoch.append(x, y);
  if (!cfg_.schedule.scheduled_at(t, i)) {
    cl.b.noalias() += x * z;
    cl.z_sq_sum += z * z;
    cl.bp_grad_sum += cl.a_grad.inv_quad_form(g);
    const Eigen::VectorXd theta_prime = cl.theta - cl.a_grad.solve(g) / gamma_;
    cl.theta = ball_projection(theta_prime, cl.a_grad, cfg_.fam.s_radius);
  } else {
    global_update(t, i);
  }
}

void Variant3Policy::global_update(int t, int acting_client) {
  const int n = cfg_.num_clients;
  const int d = cfg_.dim;

  Eigen::VectorXd agg = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd dv_sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& cl : clients_) {
    agg.noalias() += raw_gradient_sum(cfg_.fam, cl.epoch, theta_g_);
    if (cl.epoch.size() > 0)
      dv_sum.noalias() += cl.epoch.features().transpose() * cl.epoch.features();
  }

  v_g_.add_symmetric(dv_sum);
  b_g_.noalias() += dv_sum * theta_g_;  // epoch predictions under the old global model
  z_sq_global_ += theta_g_.dot(dv_sum * theta_g_);

  a_grad_g_.rank_one_update(agg);
  bp_grad_global_ += a_grad_g_.inv_quad_form(agg);
  const Eigen::VectorXd theta_prime = theta_g_ - a_grad_g_.solve(agg) / gamma_;
  theta_g_ = ball_projection(theta_prime, a_grad_g_, cfg_.fam.s_radius);

  for (auto& cl : clients_) {
    cl.theta = theta_g_;
    cl.a_grad = a_grad_g_;
    cl.v = v_g_;
    cl.b = b_g_;
    cl.z_sq_sum = 0.0;
    cl.bp_grad_sum = 0.0;
    cl.epoch.clear();
  }
  t_last_ = t;
  sync_log_.push_back({t, acting_client, 1});
  ledger_.record(MsgKind::stats_up, n,
                 static_cast<long long>(n) * (static_cast<long long>(d) * d + d));
  ledger_.record(MsgKind::sync_down, n,
                 static_cast<long long>(n) * (2LL * d * d + 2 * d));
}

}  // namespace fedglb
