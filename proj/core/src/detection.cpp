#include "tbqkd/detection.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tbqkd/parallel.hpp"

namespace tbqkd {

void DetectorConfig::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("detector config: efficiency must be in [0, 1]");
  if (!(dark_prob >= 0.0 && dark_prob <= 1.0))
    throw std::invalid_argument("detector config: dark_prob must be in [0, 1]");
  if (gate_bin < 0) throw std::invalid_argument("detector config: gate_bin must be >= 0");
}

double click_probability(double intensity, const PhotonStatistics& statistics,
                         const DetectorConfig& det) {
  det.validate();
  // Allow the rounding slop a lossless propagation produces.
  constexpr double kSlop = 1e-9;
  if (!(intensity >= -kSlop && intensity <= 1.0 + kSlop))
    throw std::invalid_argument("click_probability: intensity must be in [0, 1]");
  intensity = std::clamp(intensity, 0.0, 1.0);

  double no_signal;
  if (is_single_photon(statistics)) {
    no_signal = 1.0 - det.efficiency * intensity;
  } else {
    no_signal = std::exp(-det.efficiency * mean_photon_number(statistics) * intensity);
  }
  return 1.0 - (1.0 - det.dark_prob) * no_signal;
}

bool sample_click(double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_click: p must be in [0, 1]");
  return rng.next_bernoulli(p);
}

double calibrate_dark_for_raw_error(double target_raw_error, const ApparatusConfig& apparatus,
                                    const DetectorConfig& det, double sigma2, std::int64_t trials,
                                    const StreamFactory& streams, int threads) {
  apparatus.validate();
  if (!(target_raw_error >= 0.0 && target_raw_error <= 0.5))
    throw std::invalid_argument("calibrate_dark_for_raw_error: target must be in [0, 0.5]");
  if (trials < 1) throw std::invalid_argument("calibrate_dark_for_raw_error: trials must be >= 1");

  // Expected P1 intensities for matched-basis rounds at the two phase sums,
  // averaged over noise samples. These fix raw_error(dark) up to the click
  // model, which is then monotone in dark.
  const FieldState channel = forward_to_channel(apparatus);
  const std::set<int> bins = apparatus.channel_bins();
  const int gate = apparatus.central_output_bin();
  const NoiseModel model{sigma2};

  const std::int64_t n_chunks = (trials + kParallelChunk - 1) / kParallelChunk;
  std::vector<std::pair<std::vector<double>, std::vector<double>>> partial(
      static_cast<std::size_t>(n_chunks));
  for_each_chunk(trials, threads, [&](std::int64_t chunk, std::int64_t begin, std::int64_t end) {
    auto& [right, wrong] = partial[static_cast<std::size_t>(chunk)];
    right.reserve(static_cast<std::size_t>(end - begin));
    wrong.reserve(static_cast<std::size_t>(end - begin));
    for (std::int64_t i = begin; i < end; ++i) {
      RngStream rng = streams.stream(static_cast<std::uint64_t>(i));
      const NoiseSample noise = sample_phases(model, bins, rng);
      const FieldState ret0 = alice_station(channel, apparatus, 0.0, noise);
      right.push_back(intensity(
          bob_measurement(return_through_filter(ret0, apparatus), apparatus, 0.0),
          DetectorPort::P1, gate));
      const FieldState ret1 = alice_station(channel, apparatus, std::numbers::pi, noise);
      wrong.push_back(intensity(
          bob_measurement(return_through_filter(ret1, apparatus), apparatus, 0.0),
          DetectorPort::P1, gate));
    }
  });

  std::vector<double> i_right, i_wrong;
  i_right.reserve(static_cast<std::size_t>(trials));
  i_wrong.reserve(static_cast<std::size_t>(trials));
  for (const auto& [right, wrong] : partial) {
    i_right.insert(i_right.end(), right.begin(), right.end());
    i_wrong.insert(i_wrong.end(), wrong.begin(), wrong.end());
  }

  const PhotonStatistics stats = apparatus.source_statistics();
  auto raw_error = [&](double dark) {
    DetectorConfig d = det;
    d.dark_prob = dark;
    double p_right = 0.0;
    double p_wrong = 0.0;
    for (std::size_t i = 0; i < i_right.size(); ++i) {
      p_right += click_probability(i_right[i], stats, d);
      p_wrong += click_probability(i_wrong[i], stats, d);
    }
    const double total = p_right + p_wrong;
    return total == 0.0 ? 0.0 : p_wrong / total;
  };

  if (raw_error(0.0) > target_raw_error + 1e-12)
    throw std::invalid_argument(
        "calibrate_dark_for_raw_error: channel noise alone already exceeds the target");
  if (raw_error(1.0) < target_raw_error)
    throw std::invalid_argument("calibrate_dark_for_raw_error: target unreachable in [0, 1]");

  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    if (raw_error(mid) < target_raw_error)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace tbqkd
