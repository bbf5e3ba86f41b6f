#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fedglb/env.hpp"
#include "fedglb/numkern.hpp"
#include "fedglb/protocol.hpp"

namespace fedglb {

// Incident counters surfaced in run outputs; never silent.
struct Diagnostics {
  long long alpha_clamps = 0;      // theoretical alpha^2 went negative, clamped at 0
  long long budget_clamps = 0;     // AGD iteration budget hit its cap
  long long radial_scalings = 0;   // AGD output left the ball, radially rescaled
  long long newton_fallbacks = 0;  // MLE refit fell back to gradient steps
};

struct SyncEvent {
  int t;
  int i;           // acting client when the sync fired
  int iterations;  // gradient-aggregation rounds (0 for one-shot syncs)
};

// One simulated learner driven by the runner: pick an arm, then absorb the
// realized reward. Strictly sequential within a run; runs never share state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int select_arm(int t, int i, const RoundObservation& obs) = 0;
  virtual void observe(int t, int i, const Eigen::VectorXd& x, double y) = 0;
  virtual void end_round(int /*t*/) {}

  const CommLedger& ledger() const { return ledger_; }
  const std::vector<SyncEvent>& sync_log() const { return sync_log_; }
  long long sync_count() const { return static_cast<long long>(sync_log_.size()); }
  const Diagnostics& diagnostics() const { return diag_; }

 protected:
  CommLedger ledger_;
  std::vector<SyncEvent> sync_log_;
  Diagnostics diag_;
};

// argmax_a x_a^T theta_hat + alpha ||x_a||_{metric^{-1}}, ties to the lowest
// index. A non-finite score aborts, naming the offending arm.
int ucb_argmax(const RoundObservation& obs, const Eigen::VectorXd& theta_hat, double alpha,
               const SpdMatrix& metric);

}  // namespace fedglb
