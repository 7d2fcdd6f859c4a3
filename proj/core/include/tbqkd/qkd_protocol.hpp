#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tbqkd/apparatus.hpp"
#include "tbqkd/detection.hpp"
#include "tbqkd/noise_channel.hpp"
#include "tbqkd/rng.hpp"

namespace tbqkd {

/// One BB84 round. phi_a = alice_basis * pi/2 + alice_bit * pi; Bob applies
/// phi_b = bob_basis * pi/2.
struct RoundRecord {
  int alice_basis = 0;  // 0 -> {0, pi}, 1 -> {pi/2, 3pi/2}
  int alice_bit = 0;
  double phi_a = 0.0;
  int bob_basis = 0;
  DetectorPort monitored_port = DetectorPort::P1;
  bool clicked = false;
};

enum class SecurityZone { Secure, Unknown, Insecure };

const char* to_string(SecurityZone zone);

/// Published BB84 thresholds: provably secure below 11.0% BER, insecure from
/// 14.6% up, gray zone in between. In visibility terms: secure above 78.0%,
/// insecure at or below 70.7%.
struct SecurityThresholds {
  static constexpr double kBerSecure = 0.110;
  static constexpr double kBerInsecure = 0.146;
  static constexpr double kVisibilitySecure = 0.780;
  static constexpr double kVisibilityInsecure = 0.707;
};

/// Secure iff ber < 0.110; Insecure iff ber >= 0.146; Unknown otherwise.
/// Rejects ber outside [0, 0.5].
SecurityZone classify(double ber);

/// Intercept-resend eavesdropper: with probability p_replace she keeps the
/// state and sends a random (Haar-uniform over the occupied channel modes,
/// same norm) one instead.
struct EveModel {
  enum class Strategy { None, RandomReplacement };
  Strategy strategy = Strategy::None;
  double p_replace = 0.0;

  static EveModel none() { return {}; }
  static EveModel random_replacement(double p) {
    return {Strategy::RandomReplacement, p};
  }
  void validate() const;
};

/// Haar-uniform state over the channel modes the config occupies, scaled to
/// `norm` total probability.
FieldState random_channel_state(const ApparatusConfig& config, double norm, RngStream& rng);

/// Run `rounds` BB84 rounds with fresh noise per round; reproducible for a
/// fixed factory regardless of thread count.
std::vector<RoundRecord> run_session(const ApparatusConfig& apparatus, const NoiseModel& noise,
                                     const DetectorConfig& det, const EveModel& eve,
                                     std::int64_t rounds, DetectorPort monitored_port,
                                     const StreamFactory& streams, int threads = 1);

/// Keep clicked rounds with matching bases; Bob's bit decoded from the port
/// convention (P1 click at matched basis means bit == basis).
std::vector<std::pair<int, int>> sift(const std::vector<RoundRecord>& records);

struct BerEstimate {
  double ber = 0.0;
  double ci95 = 0.0;  ///< Wilson 95% interval half-width
  std::int64_t n_sifted = 0;
  std::int64_t mismatches = 0;
};

/// Mismatch fraction with a 95% Wilson confidence interval. Throws on empty
/// input.
BerEstimate estimate_ber(std::span<const std::pair<int, int>> sifted);

struct EveReport {
  double ber_with_eve = 0.0;
  double ber_std_error = 0.0;
  double yield_legit = 0.0;     ///< mean central-window survival, legitimate rounds
  double yield_replaced = 0.0;  ///< same for replaced rounds
  double yield_legit_se = 0.0;
  double yield_replaced_se = 0.0;
  std::int64_t trials = 0;
};

/// Expected-intensity analysis of the random-replacement attack: per trial
/// both the legitimate (noisy) and the replaced state are propagated and the
/// p_replace-blend gives the attack BER; the central-window survival is
/// accumulated per class.
EveReport eve_replacement_analysis(const ApparatusConfig& apparatus, double sigma2,
                                   double p_replace, std::int64_t trials,
                                   const StreamFactory& streams, int threads = 1);

/// Mean detection probabilities (and standard errors) of the central output
/// bin per (phi_a, phi_b, port) over Monte Carlo rounds of an ensemble with
/// noise and an optional eavesdropper. Used to compare attack and noise
/// ensembles cell by cell.
struct FringeStats {
  std::vector<double> phi_a_settings;
  std::vector<double> phi_b_settings;
  // Indexed [a * n_phi_b * 2 + b * 2 + port].
  std::vector<double> mean;
  std::vector<double> std_error;
  std::int64_t trials = 0;

  std::size_t index(std::size_t a, std::size_t b, DetectorPort port) const {
    return (a * phi_b_settings.size() + b) * 2 + (port == DetectorPort::P2 ? 1 : 0);
  }
};

FringeStats fringe_statistics(const ApparatusConfig& apparatus, const NoiseModel& noise,
                              const EveModel& eve, std::vector<double> phi_a_settings,
                              std::vector<double> phi_b_settings, std::int64_t trials,
                              const StreamFactory& streams, int threads = 1);

}  // namespace tbqkd
