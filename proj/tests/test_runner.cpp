#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedglb/errors.hpp"
#include "fedglb/runner.hpp"

using fedglb::RunConfig;
using fedglb::RunResult;
using fedglb::SweepSpec;
using fedglb::SweepTable;

namespace {

namespace fs = std::filesystem;

RunConfig small_config(const std::string& algorithm) {
  RunConfig cfg;
  cfg.algorithm = algorithm;
  cfg.T = 30;
  cfg.N = 3;
  cfg.d = 3;
  cfg.K = 4;
  cfg.seeds = {5};
  if (cfg.needs_trigger()) cfg.D = "1.0";
  if (cfg.needs_schedule()) cfg.B = 3;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("fedglb_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config validation") {
  RunConfig cfg = small_config("fedglb-ucb");
  cfg.validate();

  RunConfig bad = cfg;
  bad.D = "-1";
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("'D'"), fedglb::config_error);

  bad = cfg;
  bad.B = 5;  // both D and B set
  CHECK_THROWS_AS(bad.validate(), fedglb::config_error);

  bad = cfg;
  bad.algorithm = "fedglb-ucb-v2";  // needs B, not D
  CHECK_THROWS_AS(bad.validate(), fedglb::config_error);

  bad = cfg;
  bad.T = 0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("'T'"), fedglb::config_error);

  bad = cfg;
  bad.delta = 1.5;
  CHECK_THROWS_AS(bad.validate(), fedglb::config_error);

  CHECK_THROWS_WITH_AS(cfg.apply_override("nonsense", "1"), doctest::Contains("nonsense"),
                       fedglb::config_error);
  CHECK_THROWS_AS(cfg.apply_override("T", "abc"), fedglb::config_error);
}

TEST_CASE("config files parse and render round-trip") {
  TempDir dir("config");
  const std::string path = (dir.path / "run.cfg").string();
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "algorithm = fedglb-ucb\n";
    out << "T = 12\nN = 2\nd = 3\nK = 4\n";
    out << "D = 2.5\n";
    out << "seeds = 1,2,3\n";
  }
  const RunConfig cfg = RunConfig::from_file(path);
  CHECK(cfg.algorithm == "fedglb-ucb");
  CHECK(cfg.T == 12);
  CHECK(cfg.seeds.size() == 3);
  CHECK(cfg.resolved_trigger() == 2.5);
  cfg.validate();

  // every registry knob appears in fields(), in order
  const auto fields = cfg.fields();
  const auto& registry = RunConfig::knob_registry();
  REQUIRE(fields.size() == registry.size());
  for (std::size_t k = 0; k < registry.size(); ++k) CHECK(fields[k].first == registry[k]);
}

TEST_CASE("degenerate single-step run") {
  RunConfig cfg = small_config("fedglb-ucb");
  cfg.T = 1;
  cfg.N = 1;
  cfg.K = 1;
  const RunResult r = fedglb::run_single(cfg, 3);
  REQUIRE(r.cum_regret.size() == 1);
  CHECK(r.cum_regret[0] == 0.0);  // forced pull
  CHECK(r.arm_choices.size() == 1);
}

TEST_CASE("series are monotone and the right shape") {
  for (const std::string algo :
       {"fedglb-ucb", "fedglb-ucb-v1", "fedglb-ucb-v2", "fedglb-ucb-v3", "dislinucb",
        "one-ucb-glm", "n-ucb-glm", "n-ons-glm"}) {
    const RunConfig cfg = small_config(algo);
    const RunResult r = fedglb::run_single(cfg, 7);
    REQUIRE(static_cast<int>(r.cum_regret.size()) == cfg.T);
    for (std::size_t k = 1; k < r.cum_regret.size(); ++k) {
      CHECK(r.cum_regret[k] >= r.cum_regret[k - 1]);
      CHECK(r.cum_reward[k] >= r.cum_reward[k - 1] - 1.0);  // rewards can be 0/1 only
      CHECK(r.comm_events[k] >= r.comm_events[k - 1]);
      CHECK(r.comm_scalars[k] >= r.comm_scalars[k - 1]);
      CHECK(r.sync_counts[k] >= r.sync_counts[k - 1]);
    }
  }
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const RunConfig cfg = small_config("fedglb-ucb");
  TempDir dir_a("det_a");
  TempDir dir_b("det_b");
  const RunResult r1 = fedglb::run_single(cfg, 11);
  const RunResult r2 = fedglb::run_single(cfg, 11);
  const std::string p1 = fedglb::write_series(r1, dir_a.path.string());
  const std::string p2 = fedglb::write_series(r2, dir_b.path.string());
  CHECK(slurp(p1) == slurp(p2));
  const std::string m1 = fedglb::write_run_manifest(r1, dir_a.path.string());
  const std::string m2 = fedglb::write_run_manifest(r2, dir_b.path.string());
  CHECK(slurp(m1) == slurp(m2));
}

TEST_CASE("disabling the trigger reduces to the independent online learners") {
  RunConfig fed = small_config("fedglb-ucb");
  fed.D = "inf";
  RunConfig alias = small_config("n-ons-glm");
  alias.D = "";
  const RunResult a = fedglb::run_single(fed, 13);
  const RunResult b = fedglb::run_single(alias, 13);
  CHECK(a.arm_choices == b.arm_choices);
  CHECK(a.cum_regret == b.cum_regret);
  CHECK(a.arm_checksum == b.arm_checksum);
  CHECK(a.final_events() == 0);
  CHECK(b.final_events() == 0);
}

TEST_CASE("all algorithms consume the identical arm-set stream") {
  std::vector<std::uint64_t> checksums;
  for (const std::string algo : {"fedglb-ucb", "dislinucb", "one-ucb-glm", "n-ucb-glm"}) {
    RunConfig cfg = small_config(algo);
    cfg.T = 15;
    checksums.push_back(fedglb::run_single(cfg, 17).arm_checksum);
  }
  for (std::size_t k = 1; k < checksums.size(); ++k) CHECK(checksums[k] == checksums[0]);
}

TEST_CASE("series CSV schema and round-trip") {
  const RunConfig cfg = small_config("fedglb-ucb");
  const RunResult r = fedglb::run_single(cfg, 19);
  TempDir dir("csv");
  const std::string path = fedglb::write_series(r, dir.path.string());
  const std::string text = slurp(path);

  std::stringstream ss(text);
  std::string line;
  REQUIRE(std::getline(ss, line));
  CHECK(line == "t,cum_regret,cum_reward,comm_events,comm_scalars,sync_count");
  int rows = 0;
  RunResult parsed = r;
  parsed.cum_regret.clear();
  parsed.cum_reward.clear();
  parsed.comm_events.clear();
  parsed.comm_scalars.clear();
  parsed.sync_counts.clear();
  while (std::getline(ss, line)) {
    ++rows;
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    CHECK(std::stoi(cell) == rows);
    std::getline(row, cell, ',');
    parsed.cum_regret.push_back(std::stod(cell));
    std::getline(row, cell, ',');
    parsed.cum_reward.push_back(std::stod(cell));
    std::getline(row, cell, ',');
    parsed.comm_events.push_back(std::stoll(cell));
    std::getline(row, cell, ',');
    parsed.comm_scalars.push_back(std::stoll(cell));
    std::getline(row, cell, ',');
    parsed.sync_counts.push_back(std::stoll(cell));
  }
  CHECK(rows == cfg.T);  // file row count = T + header

  // re-serialization of the parsed series is byte-identical
  TempDir dir2("csv2");
  const std::string again = fedglb::write_series(parsed, dir2.path.string());
  CHECK(slurp(again) == text);
}

TEST_CASE("manifest echoes every knob") {
  const RunConfig cfg = small_config("fedglb-ucb");
  const RunResult r = fedglb::run_single(cfg, 23);
  TempDir dir("manifest");
  const std::string text = slurp(fedglb::write_run_manifest(r, dir.path.string()));
  for (const auto& key : RunConfig::knob_registry())
    CHECK(text.find("\n" + key + " = ") != std::string::npos);
  CHECK(text.rfind("library_version = ", 0) == 0);
  CHECK(text.find("arm_checksum = ") != std::string::npos);
}

TEST_CASE("sweeps aggregate, skip failures, and parallelize deterministically") {
  SweepSpec spec;
  spec.base = small_config("fedglb-ucb");
  spec.base.D = "";
  spec.base.T = 20;
  spec.param = "D";
  spec.values = {0.5, 5.0};
  spec.seeds = {1, 2, 3};

  const SweepTable serial = fedglb::run_sweep(spec);
  REQUIRE(serial.cells.size() == 6);
  CHECK_FALSE(serial.any_failed());

  // degenerate sweep: one value, one seed equals the single run's summary
  SweepSpec one = spec;
  one.values = {0.5};
  one.seeds = {1};
  const SweepTable single = fedglb::run_sweep(one);
  RunConfig direct = spec.base;
  direct.D = "0.5";
  direct.seeds = {1};
  const RunResult ref = fedglb::run_single(direct, 1);
  CHECK(single.cells[0].final_regret == ref.final_regret());
  CHECK(single.cells[0].final_events == ref.final_events());

  // mean rows: arithmetic mean of the per-seed rows
  TempDir dir("sweep");
  const std::string scatter = fedglb::write_scatter(serial, dir.path.string());
  const std::string text = slurp(scatter);
  CHECK(text.rfind("algo,param,value,seed,final_regret,final_comm_events,"
                   "final_comm_scalars\n", 0) == 0);
  double mean = 0.0;
  for (int k = 0; k < 3; ++k) mean += serial.cells[k].final_regret;
  mean /= 3.0;
  CHECK(text.find(",mean," + fedglb::format_g12(mean) + ",") != std::string::npos);

  // parallel execution produces byte-identical files
  SweepSpec par = spec;
  par.jobs = 4;
  const SweepTable parallel = fedglb::run_sweep(par);
  TempDir dir2("sweep_par");
  const std::string scatter_par = fedglb::write_scatter(parallel, dir2.path.string());
  CHECK(slurp(scatter_par) == text);
  CHECK(fs::path(scatter_par).filename() == fs::path(scatter).filename());

  // a failing cell is recorded, the sweep completes
  SweepSpec failing = spec;
  failing.base.env = "dataset";
  failing.base.dataset_path = "/nonexistent/corpus.csv";
  const SweepTable failed = fedglb::run_sweep(failing);
  CHECK(failed.any_failed());
  CHECK(failed.cells.size() == 6);
  const std::string manifest = slurp(fedglb::write_sweep_manifest(failed, dir.path.string()));
  CHECK(manifest.find("cells_failed = 6") != std::string::npos);
  CHECK(manifest.find("failed_cell = ") != std::string::npos);
}

TEST_CASE("run errors carry step coordinates") {
  RunConfig cfg = small_config("n-ucb-glm");
  cfg.newton_tol = 1e-300;  // unattainable stationarity: the refit must throw
  cfg.newton_max_iter = 1;
  try {
    fedglb::run_single(cfg, 29);
    FAIL("expected a runtime abort");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("(t=1, i=0)") != std::string::npos);
  }
}
