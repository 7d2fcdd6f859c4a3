#include "tbqkd/qkd_protocol.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tbqkd/parallel.hpp"

namespace tbqkd {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kZ95 = 1.959963984540054;
}  // namespace

const char* to_string(SecurityZone zone) {
  switch (zone) {
    case SecurityZone::Secure:
      return "Secure";
    case SecurityZone::Unknown:
      return "Unknown";
    case SecurityZone::Insecure:
      return "Insecure";
  }
  return "?";
}

SecurityZone classify(double ber) {
  if (!(ber >= 0.0 && ber <= 0.5))
    throw std::invalid_argument("classify: ber must be in [0, 0.5]");
  if (ber < SecurityThresholds::kBerSecure) return SecurityZone::Secure;
  if (ber >= SecurityThresholds::kBerInsecure) return SecurityZone::Insecure;
  return SecurityZone::Unknown;
}

void EveModel::validate() const {
  if (strategy == Strategy::RandomReplacement && !(p_replace >= 0.0 && p_replace <= 1.0))
    throw std::invalid_argument("eve model: p_replace must be in [0, 1]");
}

FieldState random_channel_state(const ApparatusConfig& config, double norm, RngStream& rng) {
  const std::vector<Mode> modes = return_channel_modes(config);
  std::vector<Complex> amps;
  amps.reserve(modes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const Complex c{rng.next_gaussian(), rng.next_gaussian()};
    amps.push_back(c);
    total += std::norm(c);
  }
  const double scale = total > 0.0 ? std::sqrt(norm / total) : 0.0;
  FieldState out(config.source_statistics());
  for (std::size_t i = 0; i < modes.size(); ++i) out.accumulate(modes[i], scale * amps[i]);
  return out;
}

std::vector<RoundRecord> run_session(const ApparatusConfig& apparatus, const NoiseModel& noise,
                                     const DetectorConfig& det, const EveModel& eve,
                                     std::int64_t rounds, DetectorPort monitored_port,
                                     const StreamFactory& streams, int threads) {
  apparatus.validate();
  det.validate();
  eve.validate();
  if (rounds < 1) throw std::invalid_argument("run_session: rounds must be >= 1");

  const FieldState channel = forward_to_channel(apparatus);
  const std::set<int> bins = apparatus.channel_bins();
  const std::set<int> bob_bins = apparatus.return_modulated_bins();
  const PhotonStatistics stats = apparatus.source_statistics();
  const double excess = apparatus.pm_quadrature_excess_sigma2;

  std::vector<RoundRecord> records(static_cast<std::size_t>(rounds));
  for_each_chunk(rounds, threads, [&](std::int64_t, std::int64_t begin, std::int64_t end) {
    for (std::int64_t r = begin; r < end; ++r) {
      RngStream rng = streams.stream(static_cast<std::uint64_t>(r));
      RoundRecord rec;
      rec.monitored_port = monitored_port;
      rec.alice_basis = rng.next_bit();
      rec.alice_bit = rng.next_bit();
      rec.bob_basis = rng.next_bit();
      rec.phi_a = rec.alice_basis * (kPi / 2.0) + rec.alice_bit * kPi;
      const double phi_b = rec.bob_basis * (kPi / 2.0);

      // A quadrature setting drives the polarization-sensitive modulator,
      // which adds excess phase noise on that party's bins.
      const double alice_sigma2 = noise.sigma2 + (rec.alice_basis == 1 ? excess : 0.0);
      const NoiseSample sample = sample_phases(NoiseModel{alice_sigma2}, bins, rng);
      PhaseSchedule bob_extra;
      if (excess > 0.0 && rec.bob_basis == 1) {
        const NoiseSample bob_noise = sample_phases(NoiseModel{excess}, bob_bins, rng);
        bob_extra.phase_by_bin = bob_noise.phases;
      }

      FieldState returning = alice_station(channel, apparatus, rec.phi_a, sample);
      if (eve.strategy == EveModel::Strategy::RandomReplacement &&
          rng.next_bernoulli(eve.p_replace)) {
        const double norm = returning.project_window(bins, ports::kTrunk).total_probability();
        returning = random_channel_state(apparatus, norm, rng);
      }

      const RoundTripResult result = bob_measurement(
          return_through_filter(returning, apparatus), apparatus, phi_b, bob_extra);
      const double i = intensity(result, monitored_port, det.gate_bin);
      rec.clicked = sample_click(click_probability(i, stats, det), rng);
      records[static_cast<std::size_t>(r)] = rec;
    }
  });
  return records;
}

std::vector<std::pair<int, int>> sift(const std::vector<RoundRecord>& records) {
  std::vector<std::pair<int, int>> kept;
  for (const RoundRecord& rec : records) {
    if (!rec.clicked || rec.alice_basis != rec.bob_basis) continue;
    const int bob_bit =
        rec.monitored_port == DetectorPort::P1 ? rec.bob_basis : 1 - rec.bob_basis;
    kept.emplace_back(rec.alice_bit, bob_bit);
  }
  return kept;
}

BerEstimate estimate_ber(std::span<const std::pair<int, int>> sifted) {
  if (sifted.empty()) throw std::invalid_argument("estimate_ber: no sifted bits");
  BerEstimate est;
  est.n_sifted = static_cast<std::int64_t>(sifted.size());
  for (const auto& [a, b] : sifted) est.mismatches += (a != b) ? 1 : 0;
  const double n = static_cast<double>(est.n_sifted);
  const double p = static_cast<double>(est.mismatches) / n;
  est.ber = p;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / n;
  est.ci95 = kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return est;
}

EveReport eve_replacement_analysis(const ApparatusConfig& apparatus, double sigma2,
                                   double p_replace, std::int64_t trials,
                                   const StreamFactory& streams, int threads) {
  apparatus.validate();
  if (!(p_replace >= 0.0 && p_replace <= 1.0))
    throw std::invalid_argument("eve_replacement_analysis: p_replace must be in [0, 1]");
  if (trials < 1) throw std::invalid_argument("eve_replacement_analysis: trials must be >= 1");

  const FieldState channel = forward_to_channel(apparatus);
  const std::set<int> bins = apparatus.channel_bins();
  const int gate = apparatus.central_output_bin();
  const NoiseModel model{sigma2};

  struct Sums {
    double num = 0, den = 0, num2 = 0, den2 = 0, numden = 0;
    double yl = 0, yl2 = 0, yr = 0, yr2 = 0;
  };
  const std::int64_t n_chunks = (trials + kParallelChunk - 1) / kParallelChunk;
  std::vector<Sums> partial(static_cast<std::size_t>(n_chunks));

  for_each_chunk(trials, threads, [&](std::int64_t chunk, std::int64_t begin, std::int64_t end) {
    Sums s;
    for (std::int64_t i = begin; i < end; ++i) {
      RngStream rng = streams.stream(static_cast<std::uint64_t>(i));
      const NoiseSample noise = sample_phases(model, bins, rng);
      const FieldState legit = alice_station(channel, apparatus, 0.0, noise);
      const double norm = legit.project_window(bins, ports::kTrunk).total_probability();
      const FieldState replaced = random_channel_state(apparatus, norm, rng);

      // Both classes evaluated per trial; p_replace enters only the blend.
      const FieldState legit_pm = return_through_filter(legit, apparatus);
      const FieldState repl_pm = return_through_filter(replaced, apparatus);
      const RoundTripResult l0 = bob_measurement(legit_pm, apparatus, 0.0);
      const RoundTripResult l1 = bob_measurement(legit_pm, apparatus, kPi);
      const RoundTripResult r0 = bob_measurement(repl_pm, apparatus, 0.0);
      const RoundTripResult r1 = bob_measurement(repl_pm, apparatus, kPi);
      const double lp = intensity(l0, DetectorPort::P1, gate);
      const double lm = intensity(l1, DetectorPort::P1, gate);
      const double rp = intensity(r0, DetectorPort::P1, gate);
      const double rm = intensity(r1, DetectorPort::P1, gate);

      const double num = (1.0 - p_replace) * lm + p_replace * rm;
      const double den = (1.0 - p_replace) * (lp + lm) + p_replace * (rp + rm);
      s.num += num;
      s.den += den;
      s.num2 += num * num;
      s.den2 += den * den;
      s.numden += num * den;

      const double yield_l =
          intensity(l0, DetectorPort::P1, gate) + intensity(l0, DetectorPort::P2, gate);
      const double yield_r =
          intensity(r0, DetectorPort::P1, gate) + intensity(r0, DetectorPort::P2, gate);
      s.yl += yield_l;
      s.yl2 += yield_l * yield_l;
      s.yr += yield_r;
      s.yr2 += yield_r * yield_r;
    }
    partial[static_cast<std::size_t>(chunk)] = s;
  });

  Sums t;
  for (const Sums& s : partial) {
    t.num += s.num;
    t.den += s.den;
    t.num2 += s.num2;
    t.den2 += s.den2;
    t.numden += s.numden;
    t.yl += s.yl;
    t.yl2 += s.yl2;
    t.yr += s.yr;
    t.yr2 += s.yr2;
  }

  const double n = static_cast<double>(trials);
  EveReport report;
  report.trials = trials;
  const double u = t.num / n;
  const double w = t.den / n;
  report.ber_with_eve = w > 0.0 ? u / w : 0.0;

  const double var_u = std::max(0.0, t.num2 / n - u * u) / n;
  const double var_w = std::max(0.0, t.den2 / n - w * w) / n;
  const double cov = (t.numden / n - u * w) / n;
  if (w > 0.0) {
    const double var_r = var_u / (w * w) + u * u * var_w / (w * w * w * w) -
                         2.0 * u * cov / (w * w * w);
    report.ber_std_error = std::sqrt(std::max(0.0, var_r));
  }

  report.yield_legit = t.yl / n;
  report.yield_replaced = t.yr / n;
  report.yield_legit_se =
      std::sqrt(std::max(0.0, t.yl2 / n - report.yield_legit * report.yield_legit) / n);
  report.yield_replaced_se =
      std::sqrt(std::max(0.0, t.yr2 / n - report.yield_replaced * report.yield_replaced) / n);
  return report;
}

FringeStats fringe_statistics(const ApparatusConfig& apparatus, const NoiseModel& noise,
                              const EveModel& eve, std::vector<double> phi_a_settings,
                              std::vector<double> phi_b_settings, std::int64_t trials,
                              const StreamFactory& streams, int threads) {
  apparatus.validate();
  eve.validate();
  if (trials < 1) throw std::invalid_argument("fringe_statistics: trials must be >= 1");
  if (phi_a_settings.empty() || phi_b_settings.empty())
    throw std::invalid_argument("fringe_statistics: empty settings grid");

  const FieldState channel = forward_to_channel(apparatus);
  const std::set<int> bins = apparatus.channel_bins();
  const int gate = apparatus.central_output_bin();
  const NoiseModel model{noise.sigma2};

  const std::size_t n_cells = phi_a_settings.size() * phi_b_settings.size() * 2;
  const std::int64_t n_chunks = (trials + kParallelChunk - 1) / kParallelChunk;
  std::vector<std::vector<double>> partial_sum(static_cast<std::size_t>(n_chunks)),
      partial_sum2(static_cast<std::size_t>(n_chunks));

  for_each_chunk(trials, threads, [&](std::int64_t chunk, std::int64_t begin, std::int64_t end) {
    std::vector<double> sum(n_cells, 0.0), sum2(n_cells, 0.0);
    for (std::int64_t i = begin; i < end; ++i) {
      RngStream rng = streams.stream(static_cast<std::uint64_t>(i));
      const NoiseSample sample = sample_phases(model, bins, rng);
      bool replaced_round = false;
      FieldState replaced_pm;
      if (eve.strategy == EveModel::Strategy::RandomReplacement &&
          rng.next_bernoulli(eve.p_replace)) {
        replaced_round = true;
        const FieldState legit = alice_station(channel, apparatus, 0.0, sample);
        const double norm = legit.project_window(bins, ports::kTrunk).total_probability();
        replaced_pm =
            return_through_filter(random_channel_state(apparatus, norm, rng), apparatus);
      }
      for (std::size_t a = 0; a < phi_a_settings.size(); ++a) {
        FieldState pm;
        if (replaced_round) {
          pm = replaced_pm;
        } else {
          pm = return_through_filter(
              alice_station(channel, apparatus, phi_a_settings[a], sample), apparatus);
        }
        for (std::size_t b = 0; b < phi_b_settings.size(); ++b) {
          const RoundTripResult res = bob_measurement(pm, apparatus, phi_b_settings[b]);
          for (const DetectorPort port : {DetectorPort::P1, DetectorPort::P2}) {
            const double val = intensity(res, port, gate);
            const std::size_t cell =
                (a * phi_b_settings.size() + b) * 2 + (port == DetectorPort::P2 ? 1 : 0);
            sum[cell] += val;
            sum2[cell] += val * val;
          }
        }
      }
    }
    partial_sum[static_cast<std::size_t>(chunk)] = std::move(sum);
    partial_sum2[static_cast<std::size_t>(chunk)] = std::move(sum2);
  });

  std::vector<double> sum(n_cells, 0.0), sum2(n_cells, 0.0);
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    for (std::size_t j = 0; j < n_cells; ++j) {
      sum[j] += partial_sum[static_cast<std::size_t>(c)][j];
      sum2[j] += partial_sum2[static_cast<std::size_t>(c)][j];
    }
  }

  FringeStats stats;
  stats.phi_a_settings = std::move(phi_a_settings);
  stats.phi_b_settings = std::move(phi_b_settings);
  stats.trials = trials;
  const double n = static_cast<double>(trials);
  stats.mean.resize(n_cells);
  stats.std_error.resize(n_cells);
  for (std::size_t j = 0; j < n_cells; ++j) {
    stats.mean[j] = sum[j] / n;
    stats.std_error[j] =
        std::sqrt(std::max(0.0, sum2[j] / n - stats.mean[j] * stats.mean[j]) / n);
  }
  return stats;
}

}  // namespace tbqkd
