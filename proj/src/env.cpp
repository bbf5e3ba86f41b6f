#include "fedglb/env.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fedglb/errors.hpp"

namespace fedglb {

double Environment::realize_reward(const RoundObservation& round, const Eigen::VectorXd& x,
                                   int t, int i) const {
  if (round.t != t || round.i != i)
    throw protocol_error("realize_reward: observation does not belong to step (t,i)");
  int arm = -1;
  for (int a = 0; a < round.num_arms(); ++a) {
    if (round.arms.row(a).transpose() == x) {
      arm = a;
      break;
    }
  }
  if (arm < 0) throw protocol_error("realize_reward: context is not in the round's arm set");
  return draw_reward(round, arm, t, i);
}

double Environment::instantaneous_regret(const RoundObservation& round,
                                         int chosen_index) const {
  if (chosen_index < 0 || chosen_index >= round.num_arms())
    throw protocol_error("instantaneous_regret: invalid arm index");
  const double r = round.best_expected - round.expected(chosen_index);
  return r > 0.0 ? r : 0.0;
}

SyntheticEnv::SyntheticEnv(const GlmFamily& fam, int dim, int arms_per_round,
                           std::uint64_t seed)
    : fam_(fam), dim_(dim), arms_(arms_per_round), seed_(seed) {
  if (dim < 1 || arms_per_round < 1)
    throw config_error("SyntheticEnv: d and K must be >= 1");
  rng::Stream s(seed_, rng::Purpose::theta_star, 0, 0);
  theta_star_.resize(dim_);
  for (int k = 0; k < dim_; ++k) theta_star_(k) = s.next_gaussian();
  const double n = theta_star_.norm();
  // uniform direction at the boundary of the assumption: ||theta*|| = S
  theta_star_ = n > 0.0 ? Eigen::VectorXd(theta_star_ * (fam_.s_radius / n))
                        : Eigen::VectorXd::Unit(dim_, 0) * fam_.s_radius;
}

RoundObservation SyntheticEnv::sample_arm_set(int t, int i) const {
  rng::Stream s(seed_, rng::Purpose::arm_set,
                static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
  RoundObservation obs;
  obs.t = t;
  obs.i = i;
  obs.arms.resize(arms_, dim_);
  obs.expected.resize(arms_);
  for (int a = 0; a < arms_; ++a) {
    Eigen::VectorXd x(dim_);
    for (int k = 0; k < dim_; ++k) x(k) = s.next_gaussian();
    const double n = x.norm();
    if (n > 0.0) x /= n;
    else x = Eigen::VectorXd::Unit(dim_, 0);
    obs.arms.row(a) = x.transpose();
    obs.expected(a) = fam_.link_value(x.dot(theta_star_));
  }
  obs.expected.maxCoeff(&obs.best_arm);
  obs.best_expected = obs.expected(obs.best_arm);
  return obs;
}

double SyntheticEnv::draw_reward(const RoundObservation& round, int arm_index, int t,
                                 int i) const {
  rng::Stream s(seed_, rng::Purpose::reward,
                static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
  const double mean = round.expected(arm_index);
  if (fam_.link == LinkKind::logistic) return s.next_bernoulli(mean) ? 1.0 : 0.0;
  return mean + s.next_uniform(-fam_.r_max, fam_.r_max);
}

std::uint64_t PreparedCorpus::checksum() const {
  std::uint64_t h = fnv1a_init();
  fnv1a_add(h, &d_base, sizeof(d_base));
  fnv1a_add(h, &num_classes, sizeof(num_classes));
  for (int r = 0; r < rows(); ++r) {
    fnv1a_add(h, &labels[r], sizeof(int));
    for (int k = 0; k < d_base; ++k) fnv1a_add_double(h, features(r, k));
  }
  return h;
}

void PreparedCorpus::validate() const {
  if (d_base < 1) throw data_error("corpus: d_base must be >= 1");
  if (num_classes < 2) throw data_error("corpus: need at least 2 classes");
  if (rows() == 0) throw data_error("corpus: no rows");
  if (features.rows() != rows() || features.cols() != d_base)
    throw data_error("corpus: feature table shape mismatch");
  std::vector<int> counts(num_classes, 0);
  for (int r = 0; r < rows(); ++r) {
    if (labels[r] < 0 || labels[r] >= num_classes)
      throw data_error("corpus: label out of range at row " + std::to_string(r + 1));
    if (!features.row(r).allFinite())
      throw data_error("corpus: non-finite features at row " + std::to_string(r + 1));
    if (features.row(r).norm() > 1.0 + 1e-9)
      throw data_error("corpus: row norm exceeds arm bound at row " + std::to_string(r + 1));
    ++counts[labels[r]];
  }
  for (int c = 0; c < num_classes; ++c)
    if (counts[c] == 0)
      throw data_error("corpus: class " + std::to_string(c) + " has zero rows");
}

PreparedCorpus prepare_corpus(const Eigen::MatrixXd& raw, const std::vector<int>& labels,
                              int d_base) {
  const int n = static_cast<int>(raw.rows());
  const int p = static_cast<int>(raw.cols());
  if (n == 0) throw data_error("prepare_corpus: empty table");
  if (static_cast<int>(labels.size()) != n)
    throw data_error("prepare_corpus: label count does not match row count");
  if (d_base < 1 || d_base > p)
    throw data_error("prepare_corpus: d_base must be in [1, feature count]");
  if (!raw.allFinite()) throw data_error("prepare_corpus: non-finite features");

  int num_classes = 0;
  for (int lab : labels) {
    if (lab < 0) throw data_error("prepare_corpus: negative class id");
    num_classes = std::max(num_classes, lab + 1);
  }
  if (num_classes < 2) throw data_error("prepare_corpus: need at least 2 classes");

  // standardize columns; constant columns become zeros
  Eigen::MatrixXd z = raw;
  for (int c = 0; c < p; ++c) {
    const double mean = z.col(c).mean();
    z.col(c).array() -= mean;
    const double sd = std::sqrt(z.col(c).squaredNorm() / n);
    if (sd > 1e-12) z.col(c) /= sd;
    else z.col(c).setZero();
  }

  // principal directions of the standardized table
  const Eigen::MatrixXd cov = (z.transpose() * z) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw data_error("prepare_corpus: eigendecomposition failed");
  Eigen::MatrixXd proj(p, d_base);
  for (int k = 0; k < d_base; ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(p - 1 - k);  // descending eigenvalue order
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;  // fix the sign convention
    proj.col(k) = v;
  }

  PreparedCorpus out;
  out.d_base = d_base;
  out.num_classes = num_classes;
  out.labels = labels;
  out.features = z * proj;

  // keep expanded arms strictly inside the unit ball
  const double max_norm = out.features.rowwise().norm().maxCoeff();
  const double cap = 1.0 / std::sqrt(2.0);
  if (max_norm > cap) out.features *= cap / max_norm;

  out.class_counts.assign(num_classes, 0);
  for (int lab : labels) ++out.class_counts[lab];
  out.validate();
  return out;
}

PreparedCorpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("load_corpus: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw data_error("load_corpus: empty file " + path);

  PreparedCorpus corpus;
  {
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    if (tok != "d_base") throw data_error("load_corpus: bad header at row 1");
    std::getline(ss, tok, ',');
    corpus.d_base = std::stoi(tok);
    std::getline(ss, tok, ',');
    if (tok != "classes") throw data_error("load_corpus: bad header at row 1");
    std::getline(ss, tok, ',');
    corpus.num_classes = std::stoi(tok);
  }
  if (corpus.d_base < 1 || corpus.num_classes < 2)
    throw data_error("load_corpus: bad header values at row 1");

  std::vector<Eigen::VectorXd> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    if (tok != "label")
      throw data_error("load_corpus: malformed row " + std::to_string(row_no));
    std::getline(ss, tok, ',');
    int lab;
    try {
      lab = std::stoi(tok);
    } catch (const std::exception&) {
      throw data_error("load_corpus: bad label at row " + std::to_string(row_no));
    }
    Eigen::VectorXd x(corpus.d_base);
    for (int k = 0; k < corpus.d_base; ++k) {
      if (!std::getline(ss, tok, ','))
        throw data_error("load_corpus: too few features at row " + std::to_string(row_no));
      try {
        x(k) = std::stod(tok);
      } catch (const std::exception&) {
        throw data_error("load_corpus: bad feature at row " + std::to_string(row_no));
      }
    }
    if (std::getline(ss, tok, ','))
      throw data_error("load_corpus: too many features at row " + std::to_string(row_no));
    corpus.labels.push_back(lab);
    rows.push_back(x);
  }
  corpus.features.resize(static_cast<int>(rows.size()), corpus.d_base);
  for (int r = 0; r < static_cast<int>(rows.size()); ++r)
    corpus.features.row(r) = rows[r].transpose();
  corpus.class_counts.assign(corpus.num_classes, 0);
  for (int lab : corpus.labels) {
    if (lab >= 0 && lab < corpus.num_classes) ++corpus.class_counts[lab];
  }
  corpus.validate();
  return corpus;
}

void save_corpus(const PreparedCorpus& corpus, const std::string& path) {
  corpus.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("save_corpus: cannot open " + path);
  out << "d_base," << corpus.d_base << ",classes," << corpus.num_classes << "\n";
  char buf[64];
  for (int r = 0; r < corpus.rows(); ++r) {
    out << "label," << corpus.labels[r];
    for (int k = 0; k < corpus.d_base; ++k) {
      // %.17g: exact double round trip, so load(save(c)) == c bit for bit
      std::snprintf(buf, sizeof(buf), "%.17g", corpus.features(r, k));
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw data_error("save_corpus: write failed for " + path);
}

DatasetEnv::DatasetEnv(PreparedCorpus corpus, std::uint64_t seed)
    : corpus_(std::move(corpus)), seed_(seed) {
  corpus_.validate();
}

RoundObservation DatasetEnv::sample_arm_set(int t, int i) const {
  rng::Stream s(seed_, rng::Purpose::dataset_draw,
                static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
  const int idx = static_cast<int>(s.next_index(static_cast<std::uint64_t>(corpus_.rows())));
  const int c_count = corpus_.num_classes;
  const int db = corpus_.d_base;

  RoundObservation obs;
  obs.t = t;
  obs.i = i;
  obs.label = corpus_.labels[idx];
  obs.arms = Eigen::MatrixXd::Zero(c_count, db * c_count);
  obs.expected = Eigen::VectorXd::Zero(c_count);
  for (int c = 0; c < c_count; ++c) {
    obs.arms.block(c, c * db, 1, db) = corpus_.features.row(idx);
    obs.expected(c) = c == obs.label ? 1.0 : 0.0;
  }
  obs.best_arm = obs.label;
  obs.best_expected = 1.0;
  return obs;
}

double DatasetEnv::draw_reward(const RoundObservation& round, int arm_index, int /*t*/,
                               int /*i*/) const {
  return arm_index == round.label ? 1.0 : 0.0;
}

std::uint64_t arm_set_checksum(std::uint64_t h, const RoundObservation& round) {
  for (int a = 0; a < round.num_arms(); ++a)
    for (int k = 0; k < round.arms.cols(); ++k) fnv1a_add_double(h, round.arms(a, k));
  return h;
}

}  // namespace fedglb
