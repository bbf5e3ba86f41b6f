#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedglb/glm.hpp"
#include "fedglb/rng.hpp"

namespace fedglb {

// One interaction round for one client: the candidate arms and the per-arm
// expected rewards the regret oracle needs. The environment can regenerate
// any (t, i) round on demand, so observations are plain values.
struct RoundObservation {
  int t = 0;
  int i = 0;
  Eigen::MatrixXd arms;      // one arm per row
  Eigen::VectorXd expected;  // expected reward of each arm
  int best_arm = 0;
  double best_expected = 0.0;
  int label = -1;  // dataset rounds: class of the sampled instance

  int num_arms() const { return static_cast<int>(arms.rows()); }
  Eigen::VectorXd arm(int a) const { return arms.row(a).transpose(); }
};

// Bandit environments are immutable after construction; all randomness comes
// from stateless substreams keyed by (seed, purpose, t, i), so identical
// (seed, t, i) yields identical rounds no matter which algorithm asks.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int dim() const = 0;
  virtual int arms_per_round() const = 0;
  virtual RoundObservation sample_arm_set(int t, int i) const = 0;

  // Realized reward for a chosen context. The context must be a member of the
  // round's arm set; anything else is a protocol violation.
  double realize_reward(const RoundObservation& round, const Eigen::VectorXd& x, int t,
                        int i) const;

  double instantaneous_regret(const RoundObservation& round, int chosen_index) const;

 protected:
  virtual double draw_reward(const RoundObservation& round, int arm_index, int t,
                             int i) const = 0;
};

// GLM world with ||theta*|| = S drawn uniformly on the sphere and K arms per
// round sampled i.i.d. from the unit sphere.
class SyntheticEnv : public Environment {
 public:
  SyntheticEnv(const GlmFamily& fam, int dim, int arms_per_round, std::uint64_t seed);

  int dim() const override { return dim_; }
  int arms_per_round() const override { return arms_; }
  RoundObservation sample_arm_set(int t, int i) const override;
  const Eigen::VectorXd& theta_star() const { return theta_star_; }
  const GlmFamily& family() const { return fam_; }

 protected:
  double draw_reward(const RoundObservation& round, int arm_index, int t,
                     int i) const override;

 private:
  GlmFamily fam_;
  int dim_;
  int arms_;
  std::uint64_t seed_;
  Eigen::VectorXd theta_star_;
};

// Classification corpus converted to a bandit problem. Rows are standardized,
// projected onto the leading principal directions, and rescaled so that every
// block-expanded arm stays inside the unit ball.
struct PreparedCorpus {
  int d_base = 0;
  int num_classes = 0;
  Eigen::MatrixXd features;  // rows x d_base, row norms <= 1/sqrt(2)
  std::vector<int> labels;
  std::vector<int> class_counts;

  int rows() const { return static_cast<int>(labels.size()); }
  std::uint64_t checksum() const;
  void validate() const;  // throws data_error naming the offending row
};

// Raw table -> prepared corpus: standardize to zero mean / unit variance,
// project onto the top d_base principal directions (signs fixed
// deterministically), rescale all rows to norm <= 1/sqrt(2).
PreparedCorpus prepare_corpus(const Eigen::MatrixXd& raw, const std::vector<int>& labels,
                              int d_base);

PreparedCorpus load_corpus(const std::string& path);
void save_corpus(const PreparedCorpus& corpus, const std::string& path);

// Per round, one instance (x, label) is sampled uniformly from the corpus and
// expanded into one arm per class (x placed in that class's block); choosing
// the arm whose class equals the instance's label pays 1, anything else 0.
class DatasetEnv : public Environment {
 public:
  DatasetEnv(PreparedCorpus corpus, std::uint64_t seed);

  int dim() const override { return corpus_.d_base * corpus_.num_classes; }
  int arms_per_round() const override { return corpus_.num_classes; }
  RoundObservation sample_arm_set(int t, int i) const override;
  const PreparedCorpus& corpus() const { return corpus_; }

 protected:
  double draw_reward(const RoundObservation& round, int arm_index, int t,
                     int i) const override;

 private:
  PreparedCorpus corpus_;
  std::uint64_t seed_;
};

std::uint64_t arm_set_checksum(std::uint64_t h, const RoundObservation& round);

}  // namespace fedglb
