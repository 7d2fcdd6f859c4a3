#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tbqkd/experiment.hpp"
#include "tbqkd/noise_channel.hpp"

using namespace tbqkd;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& contents = "") {
    path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(fields);
  }
  return rows;
}

ExperimentConfig small_sweep_config() {
  ExperimentConfig c = default_experiment_config();
  c.mode = RunMode::VisibilitySweep;
  c.sigma2_grid = {0.0, 0.3};
  c.trials = 2000;
  c.apparatus.single_photon_source = true;
  return c;
}

}  // namespace

TEST_CASE("defaults form a valid config") {
  const ExperimentConfig c = default_experiment_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.apparatus.filtration);
  CHECK(c.apparatus.n_pairs == 2);
  CHECK(c.seed == 0);
  REQUIRE(c.sigma2_grid.size() == 16);
  CHECK(c.sigma2_grid.front() == 0.0);
  CHECK(c.sigma2_grid.back() == doctest::Approx(1.5));
}

TEST_CASE("config file parsing") {
  const TempFile file("tbqkd_test_ok.conf",
                      "# comment\n"
                      "mode = qkd\n"
                      "seed = 12345\n"
                      "trials = 500\n"
                      "noise.sigma2_grid = 0.1, 0.2\n"
                      "apparatus.filtration = true\n"
                      "apparatus.n_pairs = 4\n"
                      "apparatus.source_statistics = single_photon\n"
                      "detector.efficiency = 0.25\n"
                      "session.monitored_port = P2\n"
                      "session.paired = false\n"
                      "eve.p_replace = 0.75\n");
  const ExperimentConfig c = load_config_file(file.path.string());
  CHECK(c.mode == RunMode::QkdSession);
  CHECK(c.seed == 12345);
  CHECK(c.trials == 500);
  CHECK(c.sigma2_grid == std::vector<double>{0.1, 0.2});
  CHECK(c.apparatus.n_pairs == 4);
  CHECK(c.apparatus.single_photon_source);
  CHECK(c.detector.efficiency == 0.25);
  CHECK(c.monitored_port == DetectorPort::P2);
  CHECK_FALSE(c.paired);
  CHECK(c.eve_p_replace == 0.75);
  CHECK_NOTHROW(c.validate());

  // An empty file is the documented default configuration.
  const TempFile empty("tbqkd_test_empty.conf", "\n");
  const ExperimentConfig d = load_config_file(empty.path.string());
  CHECK(d.apparatus.filtration);
  CHECK(d.apparatus.n_pairs == 2);
  CHECK(d.sigma2_grid.size() == 16);
}

TEST_CASE("config errors carry locations and are exhaustive") {
  const TempFile file("tbqkd_test_bad.conf",
                      "unknown.key = 1\n"
                      "trials = not_a_number\n"
                      "no equals sign here\n");
  try {
    load_config_file(file.path.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":1:") != std::string::npos);
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find(":3:") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);
  }

  CHECK_THROWS_AS(load_config_file("/nonexistent/tbqkd.conf"), ConfigError);
}

TEST_CASE("validation names the offending fields, all of them") {
  ExperimentConfig c = default_experiment_config();
  c.trials = -5;
  c.rounds = 0;
  c.eve_p_replace = 1.5;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("trials") != std::string::npos);
    CHECK(msg.find("rounds") != std::string::npos);
    CHECK(msg.find("p_replace") != std::string::npos);
  }
}

TEST_CASE("flag overrides replace file values") {
  ExperimentConfig c = default_experiment_config();
  apply_override(c, "noise.sigma2_grid", "0.3655");
  CHECK(c.sigma2_grid == std::vector<double>{0.3655});
  apply_override(c, "apparatus.filtration", "false");
  CHECK_FALSE(c.apparatus.filtration);
  CHECK(c.apparatus.n_pairs == 1);
  CHECK_THROWS_AS(apply_override(c, "bogus", "1"), ConfigError);
}

TEST_CASE("sweep output: exact header, closed forms, and domination") {
  const ExperimentConfig c = small_sweep_config();
  std::ostringstream csv;
  std::ostringstream summary;
  run_visibility_sweep(c, csv, summary);

  const auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 1 + 2 * c.sigma2_grid.size());
  CHECK(rows[0] == std::vector<std::string>{"sigma2", "variant", "V_mc", "stderr",
                                            "V_closed_form", "abs_diff"});

  double unf_at_03 = -1.0;
  double fil_at_03 = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double sigma2 = std::stod(rows[i][0]);
    const double v_mc = std::stod(rows[i][2]);
    const double v_closed = std::stod(rows[i][4]);
    const bool unfiltered = rows[i][1] == "unfiltered";
    const double expected =
        unfiltered ? visibility_unfiltered(sigma2) : visibility_filtered(2, sigma2);
    CHECK(std::abs(v_closed - expected) < 1e-12);
    if (sigma2 == 0.0) {
      CHECK(v_mc == 1.0);
      CHECK(v_closed == 1.0);
    }
    if (sigma2 > 0.0) (unfiltered ? unf_at_03 : fil_at_03) = v_mc;
  }
  CHECK(fil_at_03 > unf_at_03);

  CHECK(summary.str().find("secure_crossing_sigma2") != std::string::npos);
  CHECK(summary.str().find("insecure_crossing_sigma2") != std::string::npos);
}

TEST_CASE("sweep reproduces the enhancement window seen near the thresholds") {
  // Grid rows whose plain visibility sits in [0.65, 0.78] must map to
  // pair-encoded visibilities in [0.78, 0.85] (quoted 2-digit ranges, read
  // with a 0.005 tolerance).
  ExperimentConfig c = small_sweep_config();
  c.sigma2_grid.clear();
  for (int i = 0; i <= 15; ++i) c.sigma2_grid.push_back(0.1 * i);
  std::ostringstream csv;
  std::ostringstream summary;
  run_visibility_sweep(c, csv, summary);

  const auto rows = parse_csv(csv.str());
  std::map<double, double> unf;
  std::map<double, double> fil;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double sigma2 = std::stod(rows[i][0]);
    const double v_closed = std::stod(rows[i][4]);
    (rows[i][1] == "unfiltered" ? unf : fil)[sigma2] = v_closed;
  }
  int in_window = 0;
  for (const auto& [sigma2, v] : unf) {
    if (v >= 0.65 && v <= 0.78) {
      ++in_window;
      CHECK(fil.at(sigma2) >= 0.78 - 0.005);
      CHECK(fil.at(sigma2) <= 0.85 + 0.005);
    }
  }
  CHECK(in_window > 0);
}

TEST_CASE("qkd output: header, paired transition report, and error row") {
  ExperimentConfig c = default_experiment_config();
  c.mode = RunMode::QkdSession;
  c.sigma2_grid = {0.3655};
  c.rounds = 60000;
  c.apparatus.single_photon_source = true;
  c.detector.efficiency = 1.0;

  std::ostringstream csv;
  std::ostringstream report;
  run_qkd(c, csv, report);
  const auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"filtration", "sigma2", "mu", "dark_prob", "n_sifted",
                                            "ber", "ci95", "verdict"});
  CHECK(rows[1][0] == "false");
  CHECK(rows[2][0] == "true");
  CHECK(std::stol(rows[1][4]) > 0);
  CHECK(report.str().find("transition") != std::string::npos);

  // A detector that never clicks yields the explicit error row.
  ExperimentConfig dead = c;
  dead.rounds = 200;
  dead.detector.efficiency = 0.0;
  dead.paired = false;
  dead.apparatus.filtration = false;
  dead.apparatus.n_pairs = 1;
  std::ostringstream dead_csv;
  std::ostringstream dead_report;
  run_qkd(dead, dead_csv, dead_report);
  const auto dead_rows = parse_csv(dead_csv.str());
  REQUIRE(dead_rows.size() == 2);
  CHECK(dead_rows[1][4] == "0");
  CHECK(dead_rows[1][7] == "error_no_sifted_bits");
}

TEST_CASE("experiment outputs are byte-identical across runs and thread counts") {
  auto run_once = [](int threads, const std::string& tag) {
    ExperimentConfig c = small_sweep_config();
    c.threads = threads;
    const std::string base =
        (std::filesystem::temp_directory_path() / ("tbqkd_det_" + tag)).string();
    c.output_path = base + ".csv";
    run_experiment(c);
    std::ifstream in(c.output_path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::filesystem::remove(c.output_path);
    std::filesystem::remove(c.output_path + ".summary.txt");
    return ss.str();
  };
  const std::string a = run_once(1, "a");
  const std::string b = run_once(1, "b");
  const std::string c = run_once(4, "c");
  CHECK(a == b);
  CHECK(a == c);
  CHECK(!a.empty());
}

TEST_CASE("eve output columns") {
  ExperimentConfig c = default_experiment_config();
  c.mode = RunMode::EveAnalysis;
  c.sigma2_grid = {0.0};
  c.trials = 3000;
  c.apparatus.single_photon_source = true;
  std::ostringstream csv;
  run_eve(c, csv);
  const auto rows = parse_csv(csv.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][0] == "n_pairs");
  CHECK(std::stod(rows[1][6]) > std::stod(rows[1][7]));  // legit yield beats replaced
}

TEST_CASE("format_double uses full precision") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(0.36549999999999999)) == 0.3655);
}
