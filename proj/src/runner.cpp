#include "fedglb/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "fedglb/baselines.hpp"
#include "fedglb/errors.hpp"
#include "fedglb/fedglb.hpp"
#include "fedglb/version.hpp"

namespace fedglb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("field '" + key + "': expected an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw config_error("field '" + key + "': expected a number, got '" + value + "'");
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw config_error("field '" + key + "': expected comma-separated integers");
    }
  }
  if (out.empty()) throw config_error("field '" + key + "': empty seed list");
  return out;
}

std::string render_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(seeds[k]);
  }
  return s;
}

}  // namespace

std::string format_g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const std::vector<std::string>& algorithm_ids() {
  static const std::vector<std::string> ids = {
      "fedglb-ucb",    "fedglb-ucb-v1", "fedglb-ucb-v2", "fedglb-ucb-v3",
      "dislinucb",     "one-ucb-glm",   "n-ucb-glm",     "n-ons-glm"};
  return ids;
}

const std::vector<std::string>& RunConfig::knob_registry() {
  static const std::vector<std::string> keys = {
      "algorithm",  "T",          "N",          "d",
      "K",          "S_radius",   "lambda",     "delta",
      "D",          "B",          "alpha_mode", "alpha_scale",
      "eps_rule",   "eps_const",  "J_max",      "env",
      "link",       "R_max",      "dataset_path", "seeds",
      "newton_tol", "newton_max_iter", "refit_every"};
  return keys;
}

void RunConfig::apply_override(const std::string& key, const std::string& value) {
  if (key == "algorithm") algorithm = value;
  else if (key == "T") T = parse_int(key, value);
  else if (key == "N") N = parse_int(key, value);
  else if (key == "d") d = parse_int(key, value);
  else if (key == "K") K = parse_int(key, value);
  else if (key == "S_radius") S_radius = parse_double(key, value);
  else if (key == "lambda") lambda = parse_double(key, value);
  else if (key == "delta") delta = parse_double(key, value);
  else if (key == "D") D = value;
  else if (key == "B") B = parse_int(key, value);
  else if (key == "alpha_mode") alpha_mode = value;
  else if (key == "alpha_scale") alpha_scale = parse_double(key, value);
  else if (key == "eps_rule") eps_rule = value;
  else if (key == "eps_const") eps_const = parse_double(key, value);
  else if (key == "J_max") J_max = parse_int(key, value);
  else if (key == "env") env = value;
  else if (key == "link") link = value;
  else if (key == "R_max") R_max = parse_double(key, value);
  else if (key == "dataset_path") dataset_path = value;
  else if (key == "seeds") seeds = parse_seeds(key, value);
  else if (key == "newton_tol") newton_tol = parse_double(key, value);
  else if (key == "newton_max_iter") newton_max_iter = parse_int(key, value);
  else if (key == "refit_every") refit_every = parse_int(key, value);
  else throw config_error("unknown config key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw config_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    cfg.apply_override(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return cfg;
}

bool RunConfig::needs_trigger() const {
  return algorithm == "fedglb-ucb" || algorithm == "dislinucb";
}

bool RunConfig::needs_schedule() const {
  return algorithm == "fedglb-ucb-v1" || algorithm == "fedglb-ucb-v2" ||
         algorithm == "fedglb-ucb-v3";
}

double RunConfig::resolved_trigger() const {
  if (D == "inf") return std::numeric_limits<double>::infinity();
  if (D == "auto") return default_trigger_threshold(T, N, d);
  return parse_double("D", D);
}

void RunConfig::validate() const {
  const auto& ids = algorithm_ids();
  if (std::find(ids.begin(), ids.end(), algorithm) == ids.end())
    throw config_error("field 'algorithm': unknown algorithm '" + algorithm + "'");
  if (T < 1) throw config_error("field 'T': must be >= 1");
  if (N < 1) throw config_error("field 'N': must be >= 1");
  if (d < 1) throw config_error("field 'd': must be >= 1");
  if (K < 1) throw config_error("field 'K': must be >= 1");
  if (!(S_radius > 0.0)) throw config_error("field 'S_radius': must be positive");
  if (!(lambda > 0.0)) throw config_error("field 'lambda': must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw config_error("field 'delta': must be in (0,1)");
  if (alpha_mode != "practical" && alpha_mode != "theoretical")
    throw config_error("field 'alpha_mode': must be 'practical' or 'theoretical'");
  if (!(alpha_scale >= 0.0)) throw config_error("field 'alpha_scale': must be >= 0");
  if (eps_rule != "inverse_nt_sq" && eps_rule != "constant")
    throw config_error("field 'eps_rule': must be 'inverse_nt_sq' or 'constant'");
  if (!(eps_const > 0.0)) throw config_error("field 'eps_const': must be positive");
  if (J_max < 1) throw config_error("field 'J_max': must be >= 1");
  if (env != "synthetic" && env != "dataset")
    throw config_error("field 'env': must be 'synthetic' or 'dataset'");
  if (link != "logistic" && link != "identity")
    throw config_error("field 'link': must be 'logistic' or 'identity'");
  if (!(R_max > 0.0)) throw config_error("field 'R_max': must be positive");
  if (env == "dataset" && dataset_path.empty())
    throw config_error("field 'dataset_path': required for dataset environments");
  if (seeds.empty()) throw config_error("field 'seeds': must not be empty");
  if (!(newton_tol > 0.0)) throw config_error("field 'newton_tol': must be positive");
  if (newton_max_iter < 1) throw config_error("field 'newton_max_iter': must be >= 1");
  if (refit_every < 1) throw config_error("field 'refit_every': must be >= 1");

  // exactly one of D / B, matching the algorithm's communication control
  if (needs_trigger()) {
    if (D.empty()) throw config_error("field 'D': required by " + algorithm);
    if (B != 0) throw config_error("field 'B': must be unset for " + algorithm);
    if (D != "inf" && D != "auto") {
      const double v = parse_double("D", D);
      if (!(v > 0.0)) throw config_error("field 'D': must be positive, 'inf' or 'auto'");
    }
  } else if (needs_schedule()) {
    if (!D.empty()) throw config_error("field 'D': must be unset for " + algorithm);
    if (B < 1) throw config_error("field 'B': required (>= 1) by " + algorithm);
    if (B > T) throw config_error("field 'B': must be <= T");
  } else {
    if (!D.empty()) throw config_error("field 'D': must be unset for " + algorithm);
    if (B != 0) throw config_error("field 'B': must be unset for " + algorithm);
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::fields() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& key : knob_registry()) {
    std::string v;
    if (key == "algorithm") v = algorithm;
    else if (key == "T") v = std::to_string(T);
    else if (key == "N") v = std::to_string(N);
    else if (key == "d") v = std::to_string(d);
    else if (key == "K") v = std::to_string(K);
    else if (key == "S_radius") v = format_g12(S_radius);
    else if (key == "lambda") v = format_g12(lambda);
    else if (key == "delta") v = format_g12(delta);
    else if (key == "D") v = D;
    else if (key == "B") v = std::to_string(B);
    else if (key == "alpha_mode") v = alpha_mode;
    else if (key == "alpha_scale") v = format_g12(alpha_scale);
    else if (key == "eps_rule") v = eps_rule;
    else if (key == "eps_const") v = format_g12(eps_const);
    else if (key == "J_max") v = std::to_string(J_max);
    else if (key == "env") v = env;
    else if (key == "link") v = link;
    else if (key == "R_max") v = format_g12(R_max);
    else if (key == "dataset_path") v = dataset_path;
    else if (key == "seeds") v = render_seeds(seeds);
    else if (key == "newton_tol") v = format_g12(newton_tol);
    else if (key == "newton_max_iter") v = std::to_string(newton_max_iter);
    else if (key == "refit_every") v = std::to_string(refit_every);
    out.emplace_back(key, v);
  }
  return out;
}

std::unique_ptr<Environment> make_environment(const RunConfig& config, std::uint64_t seed) {
  const GlmFamily fam = config.link == "logistic"
                            ? GlmFamily::logistic(config.S_radius)
                            : GlmFamily::identity(config.S_radius, config.R_max);
  if (config.env == "synthetic")
    return std::make_unique<SyntheticEnv>(fam, config.d, config.K, seed);
  PreparedCorpus corpus = load_corpus(config.dataset_path);
  return std::make_unique<DatasetEnv>(std::move(corpus), seed);
}

std::unique_ptr<Policy> make_policy(const RunConfig& config, const Environment& env) {
  const int d = env.dim();
  const GlmFamily fam = config.link == "logistic"
                            ? GlmFamily::logistic(config.S_radius)
                            : GlmFamily::identity(config.S_radius, config.R_max);
  const AlphaMode mode =
      config.alpha_mode == "practical" ? AlphaMode::practical : AlphaMode::theoretical;
  EpsRule eps;
  eps.kind = config.eps_rule == "constant" ? EpsRule::Kind::constant
                                           : EpsRule::Kind::inverse_nt_sq;
  eps.constant = config.eps_const;

  const auto fed_config = [&](SyncSchedule schedule) {
    FedGlbConfig c;
    c.fam = fam;
    c.num_clients = config.N;
    c.dim = d;
    c.lambda = config.lambda;
    c.delta = config.delta;
    c.schedule = std::move(schedule);
    c.alpha_mode = mode;
    c.alpha_scale = config.alpha_scale;
    c.eps_rule = eps;
    c.j_max = config.J_max;
    return c;
  };

  if (config.algorithm == "fedglb-ucb")
    return std::make_unique<FedGlbPolicy>(
        fed_config(SyncSchedule::event_trigger(config.resolved_trigger())));
  if (config.algorithm == "n-ons-glm")
    return std::make_unique<FedGlbPolicy>(fed_config(
        SyncSchedule::event_trigger(std::numeric_limits<double>::infinity())));
  if (config.algorithm == "fedglb-ucb-v2")
    return std::make_unique<FedGlbPolicy>(
        fed_config(SyncSchedule::fixed(config.B, config.T, config.N)));
  if (config.algorithm == "fedglb-ucb-v1")
    return std::make_unique<Variant1Policy>(
        fed_config(SyncSchedule::fixed(config.B, config.T, config.N)));
  if (config.algorithm == "fedglb-ucb-v3") {
    Variant3Config c;
    c.fam = fam;
    c.num_clients = config.N;
    c.dim = d;
    c.horizon = config.T;
    c.lambda = config.lambda;
    c.delta = config.delta;
    c.schedule = SyncSchedule::fixed(config.B, config.T, config.N);
    c.alpha_mode = mode;
    c.alpha_scale = config.alpha_scale;
    return std::make_unique<Variant3Policy>(c);
  }
  if (config.algorithm == "dislinucb") {
    DisLinUcbConfig c;
    c.num_clients = config.N;
    c.dim = d;
    c.lambda = config.lambda;
    c.delta = config.delta;
    c.s_radius = config.S_radius;
    c.r_noise = config.R_max;
    c.trigger_threshold = config.resolved_trigger();
    c.alpha_mode = mode;
    c.alpha_scale = config.alpha_scale;
    return std::make_unique<DisLinUcbPolicy>(c);
  }
  UcbGlmConfig c;
  c.fam = fam;
  c.num_clients = config.N;
  c.dim = d;
  c.lambda = config.lambda;
  c.delta = config.delta;
  c.alpha_mode = mode;
  c.alpha_scale = config.alpha_scale;
  c.newton_tol = config.newton_tol;
  c.newton_max_iter = config.newton_max_iter;
  c.refit_every = config.refit_every;
  if (config.algorithm == "one-ucb-glm") return std::make_unique<OneUcbGlmPolicy>(c);
  if (config.algorithm == "n-ucb-glm") return std::make_unique<NUcbGlmPolicy>(c);
  throw config_error("unknown algorithm '" + config.algorithm + "'");
}

RunResult run_single(const RunConfig& config, std::uint64_t seed) {
  config.validate();
  auto env = make_environment(config, seed);
  auto policy = make_policy(config, *env);

  RunResult result;
  result.config = config;
  result.seed = seed;
  result.effective_dim = env->dim();
  result.effective_arms = env->arms_per_round();
  result.cum_regret.reserve(config.T);
  result.cum_reward.reserve(config.T);
  result.arm_choices.reserve(static_cast<std::size_t>(config.T) * config.N);

  std::uint64_t checksum = fnv1a_init();
  double regret = 0.0;
  double reward = 0.0;
  for (int t = 1; t <= config.T; ++t) {
    for (int i = 0; i < config.N; ++i) {
      try {
        const RoundObservation obs = env->sample_arm_set(t, i);
        checksum = arm_set_checksum(checksum, obs);
        const int chosen = policy->select_arm(t, i, obs);
        const Eigen::VectorXd x = obs.arm(chosen);
        const double y = env->realize_reward(obs, x, t, i);
        regret += env->instantaneous_regret(obs, chosen);
        reward += y;
        policy->observe(t, i, x, y);
        result.arm_choices.push_back(chosen);
      } catch (const std::exception& e) {
        throw std::runtime_error("run aborted at step (t=" + std::to_string(t) +
                                 ", i=" + std::to_string(i) + "): " + e.what());
      }
    }
    try {
      policy->end_round(t);
    } catch (const std::exception& e) {
      throw std::runtime_error("run aborted at round end (t=" + std::to_string(t) +
                               "): " + e.what());
    }
    result.cum_regret.push_back(regret);
    result.cum_reward.push_back(reward);
    result.comm_events.push_back(policy->ledger().events());
    result.comm_scalars.push_back(policy->ledger().scalars());
    result.sync_counts.push_back(policy->sync_count());
  }
  result.sync_events = policy->sync_log();
  result.diagnostics = policy->diagnostics();
  result.arm_checksum = checksum;
  for (int k = 0; k < static_cast<int>(MsgKind::kCount); ++k) {
    const auto kind = static_cast<MsgKind>(k);
    result.ledger_by_kind.emplace_back(msg_kind_name(kind), policy->ledger().events_of(kind),
                                       policy->ledger().scalars_of(kind));
  }
  return result;
}

namespace {

std::string config_digest(const RunConfig& config, std::uint64_t seed) {
  std::string blob;
  for (const auto& [k, v] : config.fields()) blob += k + "=" + v + ";";
  blob += "seed=" + std::to_string(seed);
  std::uint64_t h = fnv1a_init();
  fnv1a_add(h, blob.data(), blob.size());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%012llx", static_cast<unsigned long long>(h & 0xffffffffffffULL));
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw data_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace

std::string RunResult::run_id() const {
  return config.algorithm + "_" + config_digest(config, seed) + "_s" + std::to_string(seed);
}

std::string write_series(const RunResult& result, const std::string& out_dir) {
  std::string content = "t,cum_regret,cum_reward,comm_events,comm_scalars,sync_count\n";
  for (std::size_t r = 0; r < result.cum_regret.size(); ++r) {
    content += std::to_string(r + 1);
    content += ',';
    content += format_g12(result.cum_regret[r]);
    content += ',';
    content += format_g12(result.cum_reward[r]);
    content += ',';
    content += std::to_string(result.comm_events[r]);
    content += ',';
    content += std::to_string(result.comm_scalars[r]);
    content += ',';
    content += std::to_string(result.sync_counts[r]);
    content += '\n';
  }
  const std::string path = out_dir + "/series_" + result.run_id() + ".csv";
  atomic_write(path, content);
  return path;
}

std::string write_run_manifest(const RunResult& result, const std::string& out_dir) {
  std::string m;
  m += "library_version = " + std::string(kLibraryVersion) + "\n";
  for (const auto& [k, v] : result.config.fields()) m += k + " = " + v + "\n";
  m += "seed = " + std::to_string(result.seed) + "\n";
  if (result.config.needs_trigger())
    m += "D_resolved = " + format_g12(result.config.resolved_trigger()) + "\n";
  m += "effective_dim = " + std::to_string(result.effective_dim) + "\n";
  m += "effective_arms = " + std::to_string(result.effective_arms) + "\n";
  m += "final_regret = " + format_g12(result.final_regret()) + "\n";
  m += "final_comm_events = " + std::to_string(result.final_events()) + "\n";
  m += "final_comm_scalars = " + std::to_string(result.final_scalars()) + "\n";
  m += "sync_count = " + std::to_string(result.sync_events.size()) + "\n";
  for (const auto& [name, ev, sc] : result.ledger_by_kind) {
    m += "events_" + name + " = " + std::to_string(ev) + "\n";
    m += "scalars_" + name + " = " + std::to_string(sc) + "\n";
  }
  m += "alpha_clamps = " + std::to_string(result.diagnostics.alpha_clamps) + "\n";
  m += "budget_clamps = " + std::to_string(result.diagnostics.budget_clamps) + "\n";
  m += "radial_scalings = " + std::to_string(result.diagnostics.radial_scalings) + "\n";
  m += "newton_fallbacks = " + std::to_string(result.diagnostics.newton_fallbacks) + "\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(result.arm_checksum));
  m += "arm_checksum = " + std::string(buf) + "\n";
  const std::string path = out_dir + "/manifest_" + result.run_id() + ".txt";
  atomic_write(path, m);
  return path;
}

std::string SweepTable::sweep_id() const {
  std::string blob = algorithm + ";" + param + ";";
  for (const auto& c : cells)
    blob += format_g12(c.value) + ":" + std::to_string(c.seed) + ";";
  std::uint64_t h = fnv1a_init();
  fnv1a_add(h, blob.data(), blob.size());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%012llx",
                static_cast<unsigned long long>(h & 0xffffffffffffULL));
  return algorithm + "_" + param + "_" + buf;
}

bool SweepTable::any_failed() const {
  for (const auto& c : cells)
    if (c.failed) return true;
  return false;
}

SweepTable run_sweep(const SweepSpec& spec) {
  if (spec.param != "D" && spec.param != "B")
    throw config_error("sweep parameter must be 'D' or 'B'");
  if (spec.values.empty()) throw config_error("sweep values must not be empty");
  for (double v : spec.values)
    if (!(v > 0.0)) throw config_error("sweep values must be positive");
  {
    std::vector<double> sorted = spec.values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw config_error("sweep values must be distinct");
  }
  const std::vector<std::uint64_t>& seeds =
      spec.seeds.empty() ? spec.base.seeds : spec.seeds;
  if (seeds.empty()) throw config_error("sweep needs at least one seed");

  SweepTable table;
  table.algorithm = spec.base.algorithm;
  table.param = spec.param;
  table.base = spec.base;
  table.cells.resize(spec.values.size() * seeds.size());

  const auto run_cell = [&](std::size_t idx) {
    const double value = spec.values[idx / seeds.size()];
    const std::uint64_t seed = seeds[idx % seeds.size()];
    SweepCell cell;
    cell.value = value;
    cell.seed = seed;
    try {
      RunConfig cfg = spec.base;
      if (spec.param == "D") {
        cfg.apply_override("D", format_g12(value));
      } else {
        if (value != std::floor(value))
          throw config_error("field 'B': sweep value must be an integer");
        cfg.apply_override("B", std::to_string(static_cast<long long>(value)));
      }
      cfg.seeds = {seed};
      const RunResult r = run_single(cfg, seed);
      cell.final_regret = r.final_regret();
      cell.final_events = r.final_events();
      cell.final_scalars = r.final_scalars();
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    table.cells[idx] = std::move(cell);
  };

  const std::size_t total = table.cells.size();
  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1) {
    for (std::size_t idx = 0; idx < total; ++idx) run_cell(idx);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min<std::size_t>(jobs, total);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t idx = next.fetch_add(1); idx < total; idx = next.fetch_add(1))
          run_cell(idx);
      });
    for (auto& th : pool) th.join();
  }
  return table;
}

std::string write_scatter(const SweepTable& table, const std::string& out_dir) {
  std::string content =
      "algo,param,value,seed,final_regret,final_comm_events,final_comm_scalars\n";
  for (const auto& c : table.cells) {
    if (c.failed) continue;
    content += table.algorithm + "," + table.param + "," + format_g12(c.value) + "," +
               std::to_string(c.seed) + "," + format_g12(c.final_regret) + "," +
               std::to_string(c.final_events) + "," + std::to_string(c.final_scalars) + "\n";
  }
  // seed-averaged rows, one per swept value
  std::vector<double> values;
  for (const auto& c : table.cells)
    if (std::find(values.begin(), values.end(), c.value) == values.end())
      values.push_back(c.value);
  for (double v : values) {
    double regret = 0.0, events = 0.0, scalars = 0.0;
    int n = 0;
    for (const auto& c : table.cells) {
      if (c.failed || c.value != v) continue;
      regret += c.final_regret;
      events += static_cast<double>(c.final_events);
      scalars += static_cast<double>(c.final_scalars);
      ++n;
    }
    if (n == 0) continue;
    content += table.algorithm + "," + table.param + "," + format_g12(v) + ",mean," +
               format_g12(regret / n) + "," + format_g12(events / n) + "," +
               format_g12(scalars / n) + "\n";
  }
  const std::string path = out_dir + "/scatter_" + table.sweep_id() + ".csv";
  atomic_write(path, content);
  return path;
}

std::string write_sweep_manifest(const SweepTable& table, const std::string& out_dir) {
  std::string m;
  m += "library_version = " + std::string(kLibraryVersion) + "\n";
  for (const auto& [k, v] : table.base.fields()) m += k + " = " + v + "\n";
  m += "sweep_param = " + table.param + "\n";
  std::string values;
  std::string seeds;
  for (const auto& c : table.cells) {
    const std::string v = format_g12(c.value);
    if (values.find(v + ";") == std::string::npos) values += v + ";";
    const std::string s = std::to_string(c.seed);
    if (seeds.find(s + ";") == std::string::npos) seeds += s + ";";
  }
  m += "sweep_values = " + values + "\n";
  m += "sweep_seeds = " + seeds + "\n";
  m += "cells_total = " + std::to_string(table.cells.size()) + "\n";
  long long failed = 0;
  for (const auto& c : table.cells) failed += c.failed ? 1 : 0;
  m += "cells_failed = " + std::to_string(failed) + "\n";
  for (const auto& c : table.cells) {
    if (!c.failed) continue;
    m += "failed_cell = value=" + format_g12(c.value) + " seed=" + std::to_string(c.seed) +
         " error=" + c.error + "\n";
  }
  const std::string path = out_dir + "/manifest_" + table.sweep_id() + ".txt";
  atomic_write(path, m);
  return path;
}

}  // namespace fedglb
