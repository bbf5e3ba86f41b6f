#include "fedglb/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedglb/env.hpp"
#include "fedglb/errors.hpp"
#include "fedglb/runner.hpp"
#include "fedglb/version.hpp"

namespace fedglb {

namespace {

void apply_set_flags(RunConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw config_error("--set expects key=value, got '" + kv + "'");
    cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoull(tok));
  }
  return out;
}

struct RawTable {
  std::vector<std::vector<double>> features;
  std::vector<std::string> labels;
};

bool parse_double_cell(const std::string& cell, double* out) {
  try {
    size_t pos = 0;
    *out = std::stod(cell, &pos);
    return pos == cell.size();
  } catch (const std::exception&) {
    return false;
  }
}

// Raw classification CSV. The label column is given by 0-based index or by
// header name; a header row is detected by non-numeric feature cells.
RawTable read_raw_csv(const std::string& path, const std::string& label_col) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cells.push_back(tok);
    if (!rows.empty() && cells.size() != rows.front().size())
      throw data_error(path + ": row " + std::to_string(line_no) +
                       " has " + std::to_string(cells.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw data_error(path + ": no rows");
  const std::size_t width = rows.front().size();
  if (width < 2) throw data_error(path + ": need at least one feature and a label column");

  int label_idx = -1;
  bool header = false;
  double ignored;
  if (parse_double_cell(label_col, &ignored) &&
      label_col.find_first_not_of("0123456789") == std::string::npos) {
    label_idx = std::stoi(label_col);
    // header row detected when any cell outside the label column is non-numeric
    for (std::size_t c = 0; c < width && !header; ++c)
      if (static_cast<int>(c) != label_idx && !parse_double_cell(rows[0][c], &ignored))
        header = true;
  } else {
    header = true;
    for (std::size_t c = 0; c < width; ++c)
      if (rows[0][c] == label_col) label_idx = static_cast<int>(c);
    if (label_idx < 0)
      throw data_error(path + ": header has no column named '" + label_col + "'");
  }
  if (label_idx < 0 || label_idx >= static_cast<int>(width))
    throw data_error(path + ": label column index out of range");

  RawTable table;
  for (std::size_t r = header ? 1 : 0; r < rows.size(); ++r) {
    std::vector<double> feat;
    feat.reserve(width - 1);
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<int>(c) == label_idx) continue;
      double v;
      if (!parse_double_cell(rows[r][c], &v))
        throw data_error(path + ": row " + std::to_string(r + 1) +
                         ": non-numeric feature '" + rows[r][c] + "'");
      feat.push_back(v);
    }
    table.features.push_back(std::move(feat));
    table.labels.push_back(rows[r][label_idx]);
  }
  return table;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& out_dir) {
  RunConfig cfg = RunConfig::from_file(config_path);
  apply_set_flags(cfg, sets);
  cfg.validate();
  for (const std::uint64_t seed : cfg.seeds) {
    const RunResult result = run_single(cfg, seed);
    const std::string series = write_series(result, out_dir);
    write_run_manifest(result, out_dir);
    std::cout << series << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& out_dir, const std::string& param,
              const std::string& values_csv, const std::vector<double>& logspace,
              const std::string& seeds_csv, int jobs) {
  SweepSpec spec;
  spec.base = RunConfig::from_file(config_path);
  apply_set_flags(spec.base, sets);
  spec.param = param;
  if (!values_csv.empty()) spec.values = parse_value_list(values_csv);
  if (!logspace.empty()) {
    if (logspace.size() != 3 || logspace[2] < 1 ||
        logspace[2] != std::floor(logspace[2]))
      throw config_error("--logspace expects: lo_exp hi_exp count");
    const double lo = logspace[0];
    const double hi = logspace[1];
    const int n = static_cast<int>(logspace[2]);
    for (int k = 0; k < n; ++k) {
      const double e = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
      spec.values.push_back(std::pow(10.0, e));
    }
  }
  if (spec.values.empty()) throw config_error("sweep needs --values or --logspace");
  if (!seeds_csv.empty()) spec.seeds = parse_seed_list(seeds_csv);
  spec.jobs = jobs;

  // validate the base configuration once with the first swept value in place
  {
    RunConfig probe = spec.base;
    if (param == "D") probe.apply_override("D", format_g12(spec.values.front()));
    else probe.apply_override("B", std::to_string(static_cast<long long>(spec.values.front())));
    probe.validate();
  }

  const SweepTable table = run_sweep(spec);
  const std::string scatter = write_scatter(table, out_dir);
  write_sweep_manifest(table, out_dir);
  std::cout << scatter << "\n";
  return table.any_failed() ? 3 : 0;
}

int cmd_prepare_data(const std::string& input, const std::string& label_col, int d_base,
                     std::uint64_t /*seed*/, const std::string& out_path) {
  const RawTable raw = read_raw_csv(input, label_col);
  const int n = static_cast<int>(raw.features.size());
  const int p = static_cast<int>(raw.features.front().size());
  Eigen::MatrixXd x(n, p);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < p; ++c) x(r, c) = raw.features[r][c];

  // deterministic label ids: sorted unique label strings
  std::map<std::string, int> label_ids;
  for (const auto& lab : raw.labels) label_ids.emplace(lab, 0);
  int next_id = 0;
  for (auto& [name, id] : label_ids) id = next_id++;
  if (static_cast<int>(label_ids.size()) < 2)
    throw data_error(input + ": found a single class; a bandit needs at least 2 arms");
  std::vector<int> labels;
  labels.reserve(n);
  for (const auto& lab : raw.labels) labels.push_back(label_ids.at(lab));

  const PreparedCorpus corpus = prepare_corpus(x, labels, d_base);
  save_corpus(corpus, out_path);

  std::cout << "rows = " << corpus.rows() << "\n";
  std::cout << "d_base = " << corpus.d_base << "\n";
  std::cout << "classes = " << corpus.num_classes << "\n";
  for (const auto& [name, id] : label_ids)
    std::cout << "class " << id << " (" << name << "): " << corpus.class_counts[id]
              << " rows\n";
  std::cout << out_path << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Federated generalized linear bandit simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kLibraryVersion));

  std::string config_path;
  std::string out_dir = "results";
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "Execute a single experiment per seed");
  run->add_option("--config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--set", sets, "Override a config key (key=value)");
  run->add_option("--out", out_dir, "Output directory");

  std::string param;
  std::string values_csv;
  std::string seeds_csv;
  std::vector<double> logspace;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Sweep the trigger threshold or sync budget");
  sweep->add_option("--config", config_path, "Config file (key = value lines)")->required();
  sweep->add_option("--param", param, "Swept parameter: D or B")->required();
  sweep->add_option("--values", values_csv, "Comma-separated values");
  sweep->add_option("--logspace", logspace, "lo_exp hi_exp count (base 10)")->expected(3);
  sweep->add_option("--seeds", seeds_csv, "Comma-separated seeds (overrides config)");
  sweep->add_option("--jobs", jobs, "Parallel runs");
  sweep->add_option("--set", sets, "Override a config key (key=value)");
  sweep->add_option("--out", out_dir, "Output directory");

  std::string input;
  std::string label_col;
  std::string prep_out;
  int d_base = 10;
  std::uint64_t prep_seed = 0;
  auto* prep = app.add_subcommand("prepare-data", "Convert a raw CSV into a prepared corpus");
  prep->add_option("--input", input, "Raw CSV path")->required();
  prep->add_option("--label-col", label_col, "Label column (name or 0-based index)")
      ->required();
  prep->add_option("--d-base", d_base, "Projected feature dimension");
  prep->add_option("--seed", prep_seed, "Recorded preparation seed");
  prep->add_option("--out", prep_out, "Output corpus path")->required();

  auto* list = app.add_subcommand("list-algos", "List algorithm identifiers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, sets, out_dir);
    if (sweep->parsed())
      return cmd_sweep(config_path, sets, out_dir, param, values_csv, logspace, seeds_csv,
                       jobs);
    if (prep->parsed()) return cmd_prepare_data(input, label_col, d_base, prep_seed, prep_out);
    if (list->parsed()) {
      for (const auto& id : algorithm_ids()) std::cout << id << "\n";
      return 0;
    }
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace fedglb
