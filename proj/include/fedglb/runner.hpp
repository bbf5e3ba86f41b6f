#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fedglb/env.hpp"
#include "fedglb/policy.hpp"

namespace fedglb {

// Every knob any module consumes. Parsed from `key = value` config files,
// overridable one key at a time, echoed verbatim into run manifests.
struct RunConfig {
  std::string algorithm = "fedglb-ucb";
  int T = 100;
  int N = 1;
  int d = 2;
  int K = 2;
  double S_radius = 1.0;
  double lambda = 1.0;
  double delta = 0.01;
  std::string D = "";  // trigger threshold: number, "inf", or "auto"
  int B = 0;           // scheduled global updates; 0 = unset
  std::string alpha_mode = "practical";
  double alpha_scale = 0.25;
  std::string eps_rule = "inverse_nt_sq";  // or "constant"
  double eps_const = 1e-6;
  int J_max = 5000;
  std::string env = "synthetic";  // or "dataset"
  std::string link = "logistic";  // or "identity"
  double R_max = 1.0;
  std::string dataset_path = "";
  std::vector<std::uint64_t> seeds = {1};
  double newton_tol = 1e-8;
  int newton_max_iter = 50;
  int refit_every = 1;

  static RunConfig from_file(const std::string& path);
  static const std::vector<std::string>& knob_registry();  // canonical key list

  void apply_override(const std::string& key, const std::string& value);
  void validate() const;

  // knob name -> rendered value, in registry order
  std::vector<std::pair<std::string, std::string>> fields() const;

  bool needs_trigger() const;   // algorithms driven by threshold D
  bool needs_schedule() const;  // algorithms driven by budget B
  double resolved_trigger() const;
};

const std::vector<std::string>& algorithm_ids();

struct RunResult {
  RunConfig config;
  std::uint64_t seed = 0;
  // per-round series, index 0 = round 1
  std::vector<double> cum_regret;
  std::vector<double> cum_reward;
  std::vector<long long> comm_events;
  std::vector<long long> comm_scalars;
  std::vector<long long> sync_counts;
  std::vector<int> arm_choices;  // (t, i) row-major
  std::vector<SyncEvent> sync_events;
  std::vector<std::tuple<std::string, long long, long long>> ledger_by_kind;
  Diagnostics diagnostics;
  std::uint64_t arm_checksum = 0;
  int effective_dim = 0;
  int effective_arms = 0;

  double final_regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }
  long long final_events() const { return comm_events.empty() ? 0 : comm_events.back(); }
  long long final_scalars() const { return comm_scalars.empty() ? 0 : comm_scalars.back(); }
  std::string run_id() const;
};

std::unique_ptr<Environment> make_environment(const RunConfig& config, std::uint64_t seed);
std::unique_ptr<Policy> make_policy(const RunConfig& config, const Environment& env);

// T rounds x N clients in deterministic round-robin order. Identical
// (config, seed) gives byte-identical results; any module error aborts with
// the step coordinates attached.
RunResult run_single(const RunConfig& config, std::uint64_t seed);

struct SweepSpec {
  RunConfig base;
  std::string param;  // "D" or "B"
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;  // execution detail only; never surfaces in outputs
};

struct SweepCell {
  double value = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double final_regret = 0.0;
  long long final_events = 0;
  long long final_scalars = 0;
};

struct SweepTable {
  std::string algorithm;
  std::string param;
  RunConfig base;
  std::vector<SweepCell> cells;  // (value, seed) order, values outer

  std::string sweep_id() const;
  bool any_failed() const;
};

// Independent cells, optionally run in parallel; results land in
// deterministic (value, seed) order either way. Failed cells are recorded
// and skipped, never fatal.
SweepTable run_sweep(const SweepSpec& spec);

// CSV + manifest emission. All writes go through a temp file and rename, so
// aborts leave no partial outputs. Decimals carry 12 significant digits.
std::string format_g12(double v);
std::string write_series(const RunResult& result, const std::string& out_dir);
std::string write_run_manifest(const RunResult& result, const std::string& out_dir);
std::string write_scatter(const SweepTable& table, const std::string& out_dir);
std::string write_sweep_manifest(const SweepTable& table, const std::string& out_dir);

}  // namespace fedglb
