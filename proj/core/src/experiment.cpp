#include "tbqkd/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "tbqkd/noise_channel.hpp"

namespace tbqkd {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<bool> parse_bool(const std::string& value) {
  const std::string v = lower(trim(value));
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  return std::nullopt;
}

std::optional<double> parse_double(const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) return std::nullopt;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) return std::nullopt;
  return d;
}

template <typename T>
std::optional<T> parse_integer(const std::string& value) {
  const std::string v = trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

template <typename T, typename Parse>
std::optional<std::vector<T>> parse_list(const std::string& value, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto parsed = parse(trim(item));
    if (!parsed) return std::nullopt;
    out.push_back(*parsed);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// Applies one key=value; returns an error message on failure.
std::optional<std::string> set_key(ExperimentConfig& c, std::string_view key,
                                   const std::string& value) {
  const std::string k = trim(key);
  auto bad = [&](const char* what) {
    return std::optional<std::string>("key '" + k + "': " + what + " (got '" + trim(value) + "')");
  };

  if (k == "mode") {
    const std::string v = lower(trim(value));
    if (v == "sweep")
      c.mode = RunMode::VisibilitySweep;
    else if (v == "qkd")
      c.mode = RunMode::QkdSession;
    else if (v == "eve")
      c.mode = RunMode::EveAnalysis;
    else
      return bad("expected sweep, qkd, or eve");
    return std::nullopt;
  }
  if (k == "seed") {
    const auto v = parse_integer<std::uint64_t>(value);
    if (!v) return bad("expected unsigned 64-bit integer");
    c.seed = *v;
    return std::nullopt;
  }
  if (k == "trials") {
    const auto v = parse_integer<std::int64_t>(value);
    if (!v) return bad("expected integer");
    c.trials = *v;
    return std::nullopt;
  }
  if (k == "rounds") {
    const auto v = parse_integer<std::int64_t>(value);
    if (!v) return bad("expected integer");
    c.rounds = *v;
    return std::nullopt;
  }
  if (k == "threads") {
    const auto v = parse_integer<int>(value);
    if (!v) return bad("expected integer");
    c.threads = *v;
    return std::nullopt;
  }
  if (k == "output") {
    c.output_path = trim(value);
    return std::nullopt;
  }
  if (k == "noise.sigma2_grid") {
    const auto v = parse_list<double>(value, parse_double);
    if (!v) return bad("expected comma-separated reals");
    c.sigma2_grid = *v;
    return std::nullopt;
  }
  if (k == "apparatus.filtration") {
    const auto v = parse_bool(value);
    if (!v) return bad("expected boolean");
    c.apparatus.filtration = *v;
    if (!c.apparatus.filtration) c.apparatus.n_pairs = 1;
    return std::nullopt;
  }
  if (k == "apparatus.n_pairs") {
    const auto v = parse_integer<int>(value);
    if (!v) return bad("expected integer");
    c.apparatus.n_pairs = *v;
    return std::nullopt;
  }
  if (k == "apparatus.bin_spacing_ns") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.apparatus.bin_spacing_ns = *v;
    return std::nullopt;
  }
  if (k == "apparatus.mz_delay_bins") {
    const auto v = parse_integer<int>(value);
    if (!v) return bad("expected integer");
    c.apparatus.mz_delay_bins = *v;
    return std::nullopt;
  }
  if (k == "apparatus.source_mu") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.apparatus.source_mu = *v;
    return std::nullopt;
  }
  if (k == "apparatus.source_statistics") {
    const std::string v = lower(trim(value));
    if (v == "coherent")
      c.apparatus.single_photon_source = false;
    else if (v == "single_photon")
      c.apparatus.single_photon_source = true;
    else
      return bad("expected coherent or single_photon");
    return std::nullopt;
  }
  if (k == "apparatus.fringe_visibility") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.apparatus.fringe_visibility = *v;
    return std::nullopt;
  }
  if (k == "apparatus.pm_quadrature_excess_sigma2") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.apparatus.pm_quadrature_excess_sigma2 = *v;
    return std::nullopt;
  }
  if (k == "detector.efficiency") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.detector.efficiency = *v;
    return std::nullopt;
  }
  if (k == "detector.dark_prob") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.detector.dark_prob = *v;
    return std::nullopt;
  }
  if (k == "detector.gate_bin") {
    const auto v = parse_integer<int>(value);
    if (!v) return bad("expected integer");
    c.detector.gate_bin = *v;
    c.gate_bin_set = true;
    return std::nullopt;
  }
  if (k == "session.monitored_port") {
    const std::string v = lower(trim(value));
    if (v == "p1")
      c.monitored_port = DetectorPort::P1;
    else if (v == "p2")
      c.monitored_port = DetectorPort::P2;
    else
      return bad("expected P1 or P2");
    return std::nullopt;
  }
  if (k == "session.paired") {
    const auto v = parse_bool(value);
    if (!v) return bad("expected boolean");
    c.paired = *v;
    return std::nullopt;
  }
  if (k == "eve.p_replace") {
    const auto v = parse_double(value);
    if (!v) return bad("expected real");
    c.eve_p_replace = *v;
    return std::nullopt;
  }
  if (k == "sweep.extra_n_pairs") {
    const auto v = parse_list<int>(value, parse_integer<int>);
    if (!v) return bad("expected comma-separated integers");
    c.sweep_extra_n_pairs = *v;
    return std::nullopt;
  }
  return std::optional<std::string>("unknown key '" + k + "'");
}

struct SweepVariant {
  std::string name;
  ApparatusConfig apparatus;
  int n_pairs;  // 1 = unfiltered closed form
};

std::vector<SweepVariant> sweep_variants(const ExperimentConfig& config) {
  std::vector<SweepVariant> variants;
  auto make = [&config](int n) {
    ApparatusConfig a = config.apparatus;
    a.filtration = n > 1;
    a.n_pairs = n;
    return a;
  };
  variants.push_back({"unfiltered", make(1), 1});
  variants.push_back({"filtered_N2", make(2), 2});
  for (const int n : config.sweep_extra_n_pairs)
    variants.push_back({"filtered_N" + std::to_string(n), make(n), n});
  return variants;
}

double closed_form_visibility(int n_pairs, double sigma2) {
  return n_pairs == 1 ? visibility_unfiltered(sigma2) : visibility_filtered(n_pairs, sigma2);
}

// sigma^2 at which the closed-form visibility equals `target`.
double crossing_sigma2(int n_pairs, double target) {
  if (n_pairs == 1) return -std::log(target);
  return std::log(static_cast<double>(n_pairs) / target - (n_pairs - 1));
}

std::string mc_crossing_bracket(const std::vector<double>& grid, const std::vector<double>& v_mc,
                                double threshold) {
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = v_mc[i] - threshold;
    const double b = v_mc[i + 1] - threshold;
    if ((a >= 0.0 && b < 0.0) || (a < 0.0 && b >= 0.0)) {
      return "[" + format_double(grid[i]) + "," + format_double(grid[i + 1]) + "]";
    }
  }
  return "none";
}

}  // namespace

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::VisibilitySweep:
      return "sweep";
    case RunMode::QkdSession:
      return "qkd";
    case RunMode::EveAnalysis:
      return "eve";
  }
  return "?";
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  for (int i = 0; i <= 15; ++i) c.sigma2_grid.push_back(0.1 * i);
  return c;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  if (sigma2_grid.empty()) errors.push_back("noise.sigma2_grid must be nonempty");
  for (const double s : sigma2_grid) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      errors.push_back("noise.sigma2_grid entries must be finite and >= 0");
      break;
    }
  }
  if (trials < 1) errors.push_back("trials must be >= 1");
  if (rounds < 1) errors.push_back("rounds must be >= 1");
  if (threads < 0) errors.push_back("threads must be >= 0");
  if (output_path.empty()) errors.push_back("output path must be nonempty");
  if (!(eve_p_replace >= 0.0 && eve_p_replace <= 1.0))
    errors.push_back("eve.p_replace must be in [0, 1]");
  for (const int n : sweep_extra_n_pairs) {
    if (n < 1 || (n & (n - 1)) != 0) {
      errors.push_back("sweep.extra_n_pairs entries must be powers of two >= 1");
      break;
    }
  }
  try {
    apparatus.validate();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
  }
  try {
    detector.validate();
  } catch (const std::invalid_argument& e) {
    errors.emplace_back(e.what());
  }
  if (!errors.empty()) {
    std::string all = "invalid configuration:";
    for (const std::string& e : errors) all += "\n  - " + e;
    throw ConfigError(all);
  }
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");

  ExperimentConfig config = default_experiment_config();
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const auto err = set_key(config, stripped.substr(0, eq), stripped.substr(eq + 1));
    if (err) errors.push_back(path + ":" + std::to_string(line_no) + ": " + *err);
  }
  if (!errors.empty()) {
    std::string all = "config parse errors:";
    for (const std::string& e : errors) all += "\n  - " + e;
    throw ConfigError(all);
  }
  return config;
}

void apply_override(ExperimentConfig& config, std::string_view key, const std::string& value) {
  const auto err = set_key(config, key, value);
  if (err) throw ConfigError(*err);
}

void run_visibility_sweep(const ExperimentConfig& config, std::ostream& csv,
                          std::ostream& summary) {
  const StreamFactory root{config.seed};
  csv << "sigma2,variant,V_mc,stderr,V_closed_form,abs_diff\n";

  summary << "# security-zone crossings: sigma2 where the closed-form visibility\n";
  summary << "# crosses the secure (V=0.780) and insecure (V=0.707) boundaries,\n";
  summary << "# with the grid interval where the Monte Carlo curve crosses.\n";

  for (const SweepVariant& variant : sweep_variants(config)) {
    std::vector<double> v_mc;
    for (std::size_t s = 0; s < config.sigma2_grid.size(); ++s) {
      const double sigma2 = config.sigma2_grid[s];
      const StreamFactory streams =
          root.scoped("sweep:" + variant.name + ":" + std::to_string(s));
      const VisibilityEstimate est =
          estimate_visibility(variant.apparatus, sigma2, config.trials, streams, config.threads);
      const double closed = closed_form_visibility(variant.n_pairs, sigma2);
      v_mc.push_back(est.value);
      csv << format_double(sigma2) << ',' << variant.name << ',' << format_double(est.value)
          << ',' << format_double(est.std_error) << ',' << format_double(closed) << ','
          << format_double(std::abs(est.value - closed)) << '\n';
    }
    summary << "variant=" << variant.name << " secure_crossing_sigma2="
            << format_double(crossing_sigma2(variant.n_pairs, SecurityThresholds::kVisibilitySecure))
            << " mc_bracket="
            << mc_crossing_bracket(config.sigma2_grid, v_mc,
                                   SecurityThresholds::kVisibilitySecure)
            << '\n';
    summary << "variant=" << variant.name << " insecure_crossing_sigma2="
            << format_double(
                   crossing_sigma2(variant.n_pairs, SecurityThresholds::kVisibilityInsecure))
            << " mc_bracket="
            << mc_crossing_bracket(config.sigma2_grid, v_mc,
                                   SecurityThresholds::kVisibilityInsecure)
            << '\n';
  }
}

void run_qkd(const ExperimentConfig& config, std::ostream& csv, std::ostream& report) {
  const StreamFactory root{config.seed};
  csv << "filtration,sigma2,mu,dark_prob,n_sifted,ber,ci95,verdict\n";

  struct Leg {
    std::string name;
    ApparatusConfig apparatus;
  };
  std::vector<Leg> legs;
  if (config.paired) {
    ApparatusConfig off = config.apparatus;
    off.filtration = false;
    off.n_pairs = 1;
    ApparatusConfig on = config.apparatus;
    on.filtration = true;
    on.n_pairs = std::max(2, config.apparatus.n_pairs);
    legs.push_back({"off", off});
    legs.push_back({"on", on});
  } else {
    legs.push_back({config.apparatus.filtration ? "on" : "off", config.apparatus});
  }

  for (std::size_t s = 0; s < config.sigma2_grid.size(); ++s) {
    const double sigma2 = config.sigma2_grid[s];
    std::vector<std::string> zone_names;
    std::vector<double> bers;
    for (const Leg& leg : legs) {
      DetectorConfig det = config.detector;
      if (!config.gate_bin_set) det.gate_bin = leg.apparatus.central_output_bin();
      const StreamFactory streams = root.scoped("qkd:" + leg.name + ":" + std::to_string(s));
      const std::vector<RoundRecord> records =
          run_session(leg.apparatus, NoiseModel{sigma2}, det, EveModel::none(), config.rounds,
                      config.monitored_port, streams, config.threads);
      const auto sifted = sift(records);

      csv << (leg.apparatus.filtration ? "true" : "false") << ',' << format_double(sigma2) << ','
          << format_double(leg.apparatus.source_mu) << ',' << format_double(det.dark_prob) << ',';
      if (sifted.empty()) {
        csv << "0,nan,nan,error_no_sifted_bits\n";
        zone_names.emplace_back("error_no_sifted_bits");
        bers.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const BerEstimate est = estimate_ber(sifted);
      const SecurityZone zone = classify(std::min(est.ber, 0.5));
      csv << est.n_sifted << ',' << format_double(est.ber) << ',' << format_double(est.ci95)
          << ',' << to_string(zone) << '\n';
      zone_names.emplace_back(to_string(zone));
      bers.push_back(est.ber);
    }
    if (legs.size() == 2) {
      report << "sigma2=" << format_double(sigma2) << ": filtration off BER="
             << format_double(bers[0]) << " (" << zone_names[0] << ") -> filtration on BER="
             << format_double(bers[1]) << " (" << zone_names[1] << "); transition "
             << zone_names[0] << " -> " << zone_names[1] << '\n';
    }
  }
}

void run_eve(const ExperimentConfig& config, std::ostream& csv) {
  const StreamFactory root{config.seed};
  csv << "n_pairs,sigma2,p_replace,trials,ber_with_eve,ber_std_error,yield_legit,"
         "yield_replaced\n";
  for (std::size_t s = 0; s < config.sigma2_grid.size(); ++s) {
    const double sigma2 = config.sigma2_grid[s];
    const StreamFactory streams = root.scoped("eve:" + std::to_string(s));
    const EveReport report = eve_replacement_analysis(config.apparatus, sigma2,
                                                      config.eve_p_replace, config.trials,
                                                      streams, config.threads);
    csv << config.apparatus.n_pairs << ',' << format_double(sigma2) << ','
        << format_double(config.eve_p_replace) << ',' << report.trials << ','
        << format_double(report.ber_with_eve) << ',' << format_double(report.ber_std_error)
        << ',' << format_double(report.yield_legit) << ','
        << format_double(report.yield_replaced) << '\n';
  }
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();

  std::ofstream csv(config.output_path);
  if (!csv) throw std::runtime_error("cannot open output file '" + config.output_path + "'");

  switch (config.mode) {
    case RunMode::VisibilitySweep: {
      const std::string summary_path = config.output_path + ".summary.txt";
      std::ofstream summary(summary_path);
      if (!summary) throw std::runtime_error("cannot open output file '" + summary_path + "'");
      run_visibility_sweep(config, csv, summary);
      break;
    }
    case RunMode::QkdSession: {
      const std::string report_path = config.output_path + ".report.txt";
      std::ofstream report(report_path);
      if (!report) throw std::runtime_error("cannot open output file '" + report_path + "'");
      run_qkd(config, csv, report);
      break;
    }
    case RunMode::EveAnalysis:
      run_eve(config, csv);
      break;
  }
  if (!csv) throw std::runtime_error("failed writing '" + config.output_path + "'");
}

}  // namespace tbqkd
