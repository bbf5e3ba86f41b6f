#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fedglb/glm.hpp"
#include "fedglb/numkern.hpp"
#include "fedglb/policy.hpp"

namespace fedglb {

enum class AlphaMode { theoretical, practical };

// Target sub-optimality of each global update. The default shrinks as
// 1/(N^2 t^2) so the width contribution of finite optimization stays O(1/Nt).
struct EpsRule {
  enum class Kind { inverse_nt_sq, constant };
  Kind kind = Kind::inverse_nt_sq;
  double constant = 1e-6;

  double value(int num_clients, int t) const;
};

// When global updates happen: data-dependent event trigger with threshold D,
// or a fixed calendar of sync positions. Fixed schedules with B updates sync
// after the last client acts at t_q = q * floor(T/B); explicit position lists
// allow replaying the sync pattern of another run exactly.
struct SyncSchedule {
  enum class Kind { event_trigger, fixed };
  Kind kind = Kind::event_trigger;
  double threshold = 0.0;                       // D (event trigger)
  int num_updates = 0;                          // B (fixed)
  std::set<std::pair<int, int>> points;         // fixed: (t, i) sync positions

  static SyncSchedule event_trigger(double d_threshold);
  static SyncSchedule fixed(int num_updates, int horizon, int num_clients);
  static SyncSchedule explicit_points(std::vector<std::pair<int, int>> positions);

  bool scheduled_at(int t, int i) const {
    return kind == Kind::fixed && points.count({t, i}) > 0;
  }
};

// D = T / (N d log(N T)), the trigger threshold that balances regret against
// communication at horizon T.
double default_trigger_threshold(int horizon, int num_clients, int dim);

// Iteration budget for one distributed accelerated-gradient update:
//   J = ceil(1 + sqrt(k_mu N t / lambda + 1)
//              * log((k_mu + 2 lambda/(N t)) (2S)^2 / (2 eps)))
// clamped to [1, j_max]. The unknown distance to the optimum is replaced by
// the ball diameter 2S.
int agd_budget(int t, int num_clients, double lambda, const GlmFamily& fam, double eps_t,
               int j_max, bool* clamped = nullptr);

struct AgdOutcome {
  Eigen::VectorXd theta;    // returned estimate, inside the ball
  Eigen::VectorXd iterate;  // final iterate before any ball handling
  bool radially_scaled = false;
};

// Distributed accelerated gradient descent on the average regularized
// negative log-likelihood over all clients' data, warm-started at theta_init.
// Momentum follows the upsilon/gamma recursion
//   upsilon_j = (1 + sqrt(1 + 4 upsilon_{j-1}^2)) / 2,  gamma_j = (1 - upsilon_j)/upsilon_{j+1}
// with step size 1/(k_mu + lambda/M). If the final iterate leaves the ball it
// is radially rescaled (flagged); interior iterates pass through untouched.
AgdOutcome agd_update(const std::vector<const ClientData*>& client_data,
                      const GlmFamily& fam, double lambda,
                      const Eigen::VectorXd& theta_init, int iterations, double s_radius);

struct FedGlbConfig {
  GlmFamily fam;
  int num_clients = 1;
  int dim = 1;
  double lambda = 1.0;
  double delta = 0.01;
  SyncSchedule schedule = SyncSchedule::event_trigger(1.0);
  AlphaMode alpha_mode = AlphaMode::practical;
  double alpha_scale = 0.25;
  EpsRule eps_rule;
  int j_max = 5000;
};

// Per-client learner state between global updates.
struct ClientState {
  Eigen::VectorXd theta;      // online model, kept inside the S-ball
  SpdMatrix A;                // (lambda/c_mu) I + all own and synced contexts
  Eigen::MatrixXd delta_A;    // context outer products since the last sync
  Eigen::VectorXd b;          // predicted-reward statistics
  double logdet_snapshot;     // logdet(A) at the last sync
  double grad_norm_sum = 0.0; // sum ||grad l||^2_{A^{-1}} since the last sync
  double z_sq_sum = 0.0;      // sum of squared local predictions since the last sync
  int epoch_step_count = 0;   // t - t_last as of this client's latest action
  ClientData data;            // raw local history (consumed by global updates)
};

struct ServerState {
  Eigen::VectorXd theta;
  SpdMatrix A;
  Eigen::VectorXd b;
  int t_last = 0;
  double eps_last = 0.0;          // eps at the last sync
  double z_sq_global = 0.0;       // squared predictions of all pre-sync data
  double logdet_unit_gram = 0.0;  // log det(I + sum of pre-sync contexts)
};

struct ConfidenceBreakdown {
  double alpha = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double beta = 0.0;
  bool clamped = false;
};

// Event-triggered federated GLB learner: online-Newton local updates between
// syncs, distributed accelerated-gradient global updates when the trigger
// fires. A fixed schedule instead of the trigger gives the scheduled variant;
// an infinite threshold disables communication entirely.
class FedGlbPolicy : public Policy {
 public:
  explicit FedGlbPolicy(FedGlbConfig cfg);

  int select_arm(int t, int i, const RoundObservation& obs) override;
  void observe(int t, int i, const Eigen::VectorXd& x, double y) override;

  // (t - t_last) * log det(A_i) / det(A_i at last sync); fires when >= D
  double trigger_value(int i) const;
  bool check_trigger(int i) const;

  // Runs one global update: aggregate covariance deltas, minimize the joint
  // objective for `forced_iterations` (default: the budget formula) rounds,
  // refresh predicted-reward statistics, synchronize every client, meter all
  // messages. Exposed so fixtures and schedules can drive it directly.
  void global_update(int t, int acting_client,
                     std::optional<int> forced_iterations = std::nullopt);

  ConfidenceBreakdown confidence(int i, int t, const Eigen::VectorXd& theta_hat) const;

  const ClientState& client(int i) const { return clients_[i]; }
  const ServerState& server() const { return server_; }
  const FedGlbConfig& config() const { return cfg_; }

 private:
  void ons_local_update(ClientState& c, const Eigen::VectorXd& x, double y);
  void enforce_ball(const Eigen::VectorXd& theta) const;

  FedGlbConfig cfg_;
  ServerState server_;
  std::vector<ClientState> clients_;
};

// Scheduled communication with no local update: clients select with the last
// globally fitted model and covariance, accumulate raw data in between, and
// upload Gram matrices at each scheduled sync.
class Variant1Policy : public Policy {
 public:
  Variant1Policy(FedGlbConfig cfg);

  int select_arm(int t, int i, const RoundObservation& obs) override;
  void observe(int t, int i, const Eigen::VectorXd& x, double y) override;

  double width(int t) const;
  const Eigen::VectorXd& model() const { return theta_; }
  const SpdMatrix& covariance() const { return a_; }

 private:
  void global_update(int t, int acting_client);

  FedGlbConfig cfg_;
  Eigen::VectorXd theta_;
  SpdMatrix a_;
  int t_last_ = 0;
  std::vector<ClientData> data_;
};

struct Variant3Config {
  GlmFamily fam;
  int num_clients = 1;
  int dim = 1;
  int horizon = 1;  // enters the learning-rate bound through the batch size
  double lambda = 1.0;
  double delta = 0.01;
  SyncSchedule schedule;
  AlphaMode alpha_mode = AlphaMode::practical;
  double alpha_scale = 0.25;
};

// Lazy batched online-Newton variant: single-sample ONS steps on the
// gradient-outer-product metric between syncs, one batched ONS step on the
// aggregated epoch gradient at each scheduled sync. Arm selection uses the
// context covariance V.
class Variant3Policy : public Policy {
 public:
  explicit Variant3Policy(Variant3Config cfg);

  int select_arm(int t, int i, const RoundObservation& obs) override;
  void observe(int t, int i, const Eigen::VectorXd& x, double y) override;

  double learning_rate() const { return gamma_; }
  double width(int i, int t, const Eigen::VectorXd& theta_hat,
               bool* clamped = nullptr) const;

  struct Client {
    Eigen::VectorXd theta;
    SpdMatrix a_grad;        // lambda I + gradient outer products
    SpdMatrix v;             // lambda I + context outer products
    Eigen::VectorXd b;
    double z_sq_sum = 0.0;
    double bp_grad_sum = 0.0;  // local part of the online-regret bound
    ClientData epoch;          // samples since the last sync
  };
  const Client& client(int i) const { return clients_[i]; }

 private:
  void global_update(int t, int acting_client);

  Variant3Config cfg_;
  double gamma_ = 0.0;
  Eigen::VectorXd theta_g_;
  SpdMatrix a_grad_g_;
  SpdMatrix v_g_;
  Eigen::VectorXd b_g_;
  double z_sq_global_ = 0.0;
  double bp_grad_global_ = 0.0;
  int t_last_ = 0;
  std::vector<Client> clients_;
};

// ONS learning rate from the exp-concavity condition:
//   gamma = (1/2) min( 1/(4 S G), c_mu / (G^2 * max_batch) ),
// G = sqrt(k_mu^2 S^2 + R_max^2), max_batch = ceil(N T / B).
double variant3_learning_rate(const GlmFamily& fam, int num_clients, int horizon,
                              int num_updates);

}  // namespace fedglb
