#include "tbqkd/apparatus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tbqkd/parallel.hpp"

namespace tbqkd {

const char* to_string(DetectorPort port) { return port == DetectorPort::P1 ? "P1" : "P2"; }

namespace ports {
std::string mz_arm(int stage) { return "mz" + std::to_string(stage); }
std::string forward_dump(int stage) { return "dump_fwd" + std::to_string(stage); }
std::string return_dump(int stage) { return "dump_ret" + std::to_string(stage); }
}  // namespace ports

namespace {

constexpr Complex kImag{0.0, 1.0};

bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

// Perfect 90-degree polarization rotator on one fiber segment.
FieldState rotate_polarization(const FieldState& s, std::string_view path) {
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == path)
      out.accumulate(Mode{mode.time_bin, complement(mode.pol), mode.path}, amp);
    else
      out.accumulate(mode, amp);
  }
  return out;
}

FieldState relabel_path(const FieldState& s, std::string_view from, const std::string& to) {
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == from)
      out.accumulate(Mode{mode.time_bin, mode.pol, to}, amp);
    else
      out.accumulate(mode, amp);
  }
  return out;
}

double path_probability(const FieldState& s, std::string_view path) {
  double total = 0.0;
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == path) total += std::norm(amp);
  }
  return total;
}

// All subset sums of the stage delays: the relative delays a pulse can pick
// up in one pass through the filter cascade.
std::set<int> subset_sums(const std::vector<int>& delays) {
  std::set<int> sums{0};
  for (const int d : delays) {
    std::set<int> shifted;
    for (const int s : sums) shifted.insert(s + d);
    sums.insert(shifted.begin(), shifted.end());
  }
  return sums;
}

// Channel bins carrying the phase-encoded half of the qubit (H-polarized on
// the return leg; the e^{i phi_a} factor sits on these).
std::set<int> encoded_channel_bins(const ApparatusConfig& config) {
  std::set<int> bins;
  for (const int s : subset_sums(config.stage_delays())) bins.insert(1 + s);
  return bins;
}

// H-polarized bins at the receiver's phase modulator on the return pass.
std::set<int> modulated_return_bins(const ApparatusConfig& config) {
  const std::set<int> sums = subset_sums(config.stage_delays());
  std::set<int> bins;
  for (const int a : sums)
    for (const int b : sums) bins.insert(1 + a + b);
  return bins;
}

}  // namespace

void ApparatusConfig::validate() const {
  std::string errors;
  auto add = [&errors](const std::string& msg) {
    if (!errors.empty()) errors += "; ";
    errors += msg;
  };

  if (!is_power_of_two(n_pairs))
    add("n_pairs must be a power of two >= 1 (the filter cascade doubles bins per stage)");
  if (!filtration && n_pairs != 1) add("filtration=false forces n_pairs=1");
  if (mz_delay_bins < 1) add("mz_delay_bins must be >= 1");
  if (!(bin_spacing_ns > 0.0)) add("bin_spacing_ns must be > 0");
  if (!(source_mu >= 0.0)) add("source_mu must be >= 0");
  if (!(fringe_visibility >= 0.0 && fringe_visibility <= 1.0))
    add("fringe_visibility must be in [0, 1]");
  if (!(pm_quadrature_excess_sigma2 >= 0.0)) add("pm_quadrature_excess_sigma2 must be >= 0");

  if (errors.empty() && is_power_of_two(n_pairs)) {
    // The stage delays must keep every time-bin replica distinct.
    std::set<int> bins{0, 1};
    for (const int d : stage_delays()) {
      std::set<int> shifted;
      for (const int b : bins) shifted.insert(b + d);
      for (const int b : shifted) {
        if (bins.count(b) != 0) {
          add("stage delays collide occupied time bins (increase mz_delay_bins)");
          break;
        }
      }
      bins.insert(shifted.begin(), shifted.end());
      if (!errors.empty()) break;
    }
  }

  if (!errors.empty()) throw std::invalid_argument("apparatus config: " + errors);
}

PhotonStatistics ApparatusConfig::source_statistics() const {
  if (single_photon_source) return SinglePhoton{};
  return Coherent{source_mu};
}

int ApparatusConfig::stage_count() const {
  if (!filtration) return 0;
  int stages = 0;
  for (int n = n_pairs; n > 1; n /= 2) ++stages;
  return stages;
}

std::vector<int> ApparatusConfig::stage_delays() const {
  std::vector<int> delays;
  delays.reserve(static_cast<std::size_t>(stage_count()));
  for (int k = 0; k < stage_count(); ++k) delays.push_back(mz_delay_bins << k);
  return delays;
}

std::set<int> ApparatusConfig::channel_bins() const {
  std::set<int> bins;
  for (const int s : subset_sums(stage_delays())) {
    bins.insert(s);
    bins.insert(1 + s);
  }
  return bins;
}

int ApparatusConfig::central_output_bin() const {
  int total = 0;
  for (const int d : stage_delays()) total += d;
  return total;
}

std::vector<int> ApparatusConfig::output_bins() const {
  const std::set<int> sums = subset_sums(stage_delays());
  std::set<int> labels;
  for (const int a : sums)
    for (const int b : sums) labels.insert(a + b);
  return {labels.begin(), labels.end()};
}

std::set<int> ApparatusConfig::return_modulated_bins() const { return modulated_return_bins(*this); }

std::vector<Mode> return_channel_modes(const ApparatusConfig& config) {
  std::vector<Mode> modes;
  for (const int s : subset_sums(config.stage_delays())) {
    modes.push_back(Mode{s, Polarization::V, std::string(ports::kTrunk)});
    modes.push_back(Mode{1 + s, Polarization::H, std::string(ports::kTrunk)});
  }
  std::sort(modes.begin(), modes.end());
  return modes;
}

FieldState forward_to_channel(const ApparatusConfig& config) {
  config.validate();
  FieldState s = new_pulse(0, Polarization::H, std::string(ports::kShortArm), Complex{1.0, 0.0},
                           config.source_statistics());
  s = coupler(s, CouplerSpec{std::string(ports::kShortArm), std::string(ports::kLongArm), 0.5});
  s = delay(s, ports::kLongArm, 1);
  s = rotate_polarization(s, ports::kLongArm);
  s = pbs(s, ports::kShortArm, ports::kLongArm, ports::kTrunk);

  const std::vector<int> delays = config.stage_delays();
  for (int k = 0; k < static_cast<int>(delays.size()); ++k) {
    const CouplerSpec stage{std::string(ports::kTrunk), ports::mz_arm(k), 0.5};
    s = coupler(s, stage);
    s = delay(s, stage.port_b, delays[static_cast<std::size_t>(k)]);
    s = coupler(s, stage);
    s = relabel_path(s, stage.port_b, ports::forward_dump(k));
  }
  return s.pruned();
}

FieldState alice_station(const FieldState& channel_state, const ApparatusConfig& config,
                         double phi_a, const NoiseSample& noise) {
  for (const int bin : config.channel_bins()) {
    if (noise.phases.count(bin) == 0)
      throw std::invalid_argument("alice_station: noise sample does not cover channel bin " +
                                  std::to_string(bin));
  }
  FieldState s = faraday_mirror(channel_state, ports::kTrunk);
  PhaseSchedule encoding;
  for (const int bin : encoded_channel_bins(config)) encoding.phase_by_bin[bin] = phi_a;
  s = phase_modulator(s, ports::kTrunk, encoding);
  return apply_noise(s, noise, ports::kTrunk);
}

FieldState return_through_filter(const FieldState& returning, const ApparatusConfig& config) {
  FieldState s = returning;
  const std::vector<int> delays = config.stage_delays();
  for (int k = static_cast<int>(delays.size()) - 1; k >= 0; --k) {
    const CouplerSpec stage{std::string(ports::kTrunk), ports::mz_arm(k), 0.5};
    s = coupler(s, stage);
    s = delay(s, stage.port_b, delays[static_cast<std::size_t>(k)]);
    s = coupler(s, stage);
    s = relabel_path(s, stage.port_b, ports::return_dump(k));
  }
  return s.pruned();
}

RoundTripResult bob_measurement(const FieldState& at_bob_pm, const ApparatusConfig& config,
                                double phi_b, const PhaseSchedule& extra_pm_phases) {
  PhaseSchedule sched;
  for (const int bin : modulated_return_bins(config))
    sched.phase_by_bin[bin] = phi_b + extra_pm_phases.at(bin);
  FieldState s = phase_modulator(at_bob_pm, ports::kTrunk, sched);
  s = pbs_reversed(s, ports::kTrunk, ports::kShortArm, ports::kLongArm);
  s = delay(s, ports::kLongArm, 1);
  s = rotate_polarization(s, ports::kLongArm);

  RoundTripResult result;
  result.fringe_visibility = config.fringe_visibility;
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == ports::kShortArm)
      result.premerge[mode.time_bin].first += amp;
    else if (mode.path == ports::kLongArm)
      result.premerge[mode.time_bin].second += amp;
  }

  s = coupler(s, CouplerSpec{std::string(ports::kShortArm), std::string(ports::kLongArm), 0.5});

  FieldState detector(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == ports::kShortArm)
      detector.accumulate(Mode{mode.time_bin - 1, mode.pol, std::string(ports::kDetectorP1)}, amp);
    else if (mode.path == ports::kLongArm)
      detector.accumulate(Mode{mode.time_bin - 1, mode.pol, std::string(ports::kDetectorP2)}, amp);
  }
  result.detector_state = detector.pruned();

  for (int k = 0; k < config.stage_count(); ++k) {
    result.loss_forward += path_probability(s, ports::forward_dump(k));
    result.loss_return += path_probability(s, ports::return_dump(k));
  }
  return result;
}

RoundTripResult propagate(const ApparatusConfig& config, double phi_a, double phi_b,
                          const NoiseSample& noise) {
  const FieldState channel = forward_to_channel(config);
  const FieldState returning = alice_station(channel, config, phi_a, noise);
  const FieldState at_pm = return_through_filter(returning, config);
  return bob_measurement(at_pm, config, phi_b);
}

double intensity(const RoundTripResult& result, DetectorPort port, int gate_bin) {
  const auto it = result.premerge.find(gate_bin + 1);
  if (it == result.premerge.end()) return 0.0;
  const auto& [a, b] = it->second;
  const double direct = 0.5 * (std::norm(a) + std::norm(b));
  const double cross = (kImag * std::conj(a) * b).real();
  const double v = result.fringe_visibility;
  return port == DetectorPort::P1 ? direct + v * cross : direct - v * cross;
}

double detected_probability(const RoundTripResult& result) {
  double total = 0.0;
  for (const auto& [bin, amps] : result.premerge)
    total += std::norm(amps.first) + std::norm(amps.second);
  return total;
}

VisibilityEstimate estimate_visibility(const ApparatusConfig& config, double sigma2,
                                       std::int64_t trials, const StreamFactory& streams,
                                       int threads) {
  config.validate();
  if (trials < 1) throw std::invalid_argument("estimate_visibility: trials must be >= 1");

  const FieldState channel = forward_to_channel(config);
  const std::set<int> bins = config.channel_bins();
  const int gate = config.central_output_bin();
  const NoiseModel model{sigma2};

  struct Moments {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  };
  const std::int64_t n_chunks = (trials + kParallelChunk - 1) / kParallelChunk;
  std::vector<Moments> partial(static_cast<std::size_t>(n_chunks));

  for_each_chunk(trials, threads, [&](std::int64_t chunk, std::int64_t begin, std::int64_t end) {
    Moments m;
    for (std::int64_t i = begin; i < end; ++i) {
      RngStream rng = streams.stream(static_cast<std::uint64_t>(i));
      const NoiseSample noise = sample_phases(model, bins, rng);
      const FieldState max_ret = alice_station(channel, config, 0.0, noise);
      const double x =
          intensity(bob_measurement(return_through_filter(max_ret, config), config, 0.0),
                    DetectorPort::P1, gate);
      const FieldState min_ret = alice_station(channel, config, std::numbers::pi, noise);
      const double y =
          intensity(bob_measurement(return_through_filter(min_ret, config), config, 0.0),
                    DetectorPort::P1, gate);
      m.sx += x;
      m.sy += y;
      m.sxx += x * x;
      m.syy += y * y;
      m.sxy += x * y;
    }
    partial[static_cast<std::size_t>(chunk)] = m;
  });

  Moments total;
  for (const Moments& m : partial) {
    total.sx += m.sx;
    total.sy += m.sy;
    total.sxx += m.sxx;
    total.syy += m.syy;
    total.sxy += m.sxy;
  }

  const double n = static_cast<double>(trials);
  const double x_mean = total.sx / n;
  const double y_mean = total.sy / n;
  const double sum = x_mean + y_mean;
  VisibilityEstimate est;
  est.trials = trials;
  est.mean_imax = x_mean;
  est.mean_imin = y_mean;
  est.value = (x_mean - y_mean) / sum;

  // Delta method for V = (X-Y)/(X+Y) with paired, correlated samples.
  const double var_x = std::max(0.0, total.sxx / n - x_mean * x_mean) / n;
  const double var_y = std::max(0.0, total.syy / n - y_mean * y_mean) / n;
  const double cov = (total.sxy / n - x_mean * y_mean) / n;
  const double denom4 = sum * sum * sum * sum;
  const double var_v =
      4.0 * (y_mean * y_mean * var_x - 2.0 * x_mean * y_mean * cov + x_mean * x_mean * var_y) /
      denom4;
  est.std_error = std::sqrt(std::max(0.0, var_v));
  return est;
}

}  // namespace tbqkd
