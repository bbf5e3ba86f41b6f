#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fedglb/fedglb.hpp"
#include "fedglb/glm.hpp"
#include "fedglb/numkern.hpp"
#include "fedglb/policy.hpp"

namespace fedglb {

struct DisLinUcbConfig {
  int num_clients = 1;
  int dim = 1;
  double lambda = 1.0;
  double delta = 0.01;
  double s_radius = 1.0;
  double r_noise = 1.0;             // sub-Gaussian scale in the width
  double trigger_threshold = 1.0;   // D
  AlphaMode alpha_mode = AlphaMode::practical;
  double alpha_scale = 0.25;
};

// Event-triggered federated linear UCB: ridge estimates from raw-reward
// sufficient statistics, one-round (delta up, state down) synchronization.
// Deliberately treats any reward model as linear.
class DisLinUcbPolicy : public Policy {
 public:
  explicit DisLinUcbPolicy(DisLinUcbConfig cfg);

  int select_arm(int t, int i, const RoundObservation& obs) override;
  void observe(int t, int i, const Eigen::VectorXd& x, double y) override;

  double width(int i) const;

  struct Client {
    SpdMatrix A;
    Eigen::VectorXd b;
    Eigen::MatrixXd delta_A;
    Eigen::VectorXd delta_b;
    double logdet_snapshot;
    long long samples = 0;
  };
  const Client& client(int i) const { return clients_[i]; }

 private:
  void sync(int t, int acting_client);

  DisLinUcbConfig cfg_;
  SpdMatrix a_server_;
  Eigen::VectorXd b_server_;
  long long samples_server_ = 0;
  int t_last_ = 0;
  std::vector<Client> clients_;
};

// Regularized maximum-likelihood state for the UCB-GLM baselines.
struct MleState {
  ClientData data;
  Eigen::VectorXd theta;
  double newton_tol = 1e-8;
  int newton_max_iter = 50;
};

struct FitOutcome {
  int iterations = 0;
  bool gradient_fallback = false;
};

// Damped Newton on the mean lambda-regularized negative log-likelihood, warm
// started from the previous estimate. Stops at gradient norm <= newton_tol
// (asserted) or newton_max_iter. A failed Hessian factorization falls back to
// plain gradient steps for that refit. The returned model is pulled inside
// the S-ball under the local Hessian metric when needed.
FitOutcome ucb_glm_fit(MleState& state, const GlmFamily& fam, double lambda,
                       double s_radius);

struct UcbGlmConfig {
  GlmFamily fam;
  int num_clients = 1;
  int dim = 1;
  double lambda = 1.0;
  double delta = 0.01;
  AlphaMode alpha_mode = AlphaMode::practical;
  double alpha_scale = 0.25;
  double newton_tol = 1e-8;
  int newton_max_iter = 50;
  int refit_every = 1;  // refit cadence in rounds (shared-model baseline)
};

// One shared GLM fitted over all clients' data, refit after each full round.
// Every round charges the N^2 all-pairs sharing floor to the ledger.
class OneUcbGlmPolicy : public Policy {
 public:
  explicit OneUcbGlmPolicy(UcbGlmConfig cfg);

  int select_arm(int t, int i, const RoundObservation& obs) override;
  void observe(int t, int i, const Eigen::VectorXd& x, double y) override;
  void end_round(int t) override;

  const Eigen::VectorXd& model() const { return mle_.theta; }

 private:
  UcbGlmConfig cfg_;
  MleState mle_;
  SpdMatrix a_;
  long long samples_ = 0;
};

// One GLM per client, refit after every sample, no communication.
class NUcbGlmPolicy : public Policy {
 public:
  explicit NUcbGlmPolicy(UcbGlmConfig cfg);

  int select_arm(int t, int i, const RoundObservation& obs) override;
  void observe(int t, int i, const Eigen::VectorXd& x, double y) override;

 private:
  struct Client {
    MleState mle;
    SpdMatrix A;
    long long samples = 0;
  };
  UcbGlmConfig cfg_;
  std::vector<Client> clients_;
};

}  // namespace fedglb
