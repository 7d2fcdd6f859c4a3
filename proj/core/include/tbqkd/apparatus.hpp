#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tbqkd/noise_channel.hpp"
#include "tbqkd/optical_elements.hpp"
#include "tbqkd/photonic_state.hpp"
#include "tbqkd/rng.hpp"

namespace tbqkd {

enum class DetectorPort { P1, P2 };

const char* to_string(DetectorPort port);

/// Fiber segment labels of the simulated network.
namespace ports {
inline constexpr std::string_view kShortArm = "short";    // laser -> C1 -> PBS(H)
inline constexpr std::string_view kLongArm = "long";      // C1 -> delay+rotator -> PBS(V)
inline constexpr std::string_view kTrunk = "trunk";       // PBS -> filter stages -> channel
inline constexpr std::string_view kDetectorP1 = "P1";
inline constexpr std::string_view kDetectorP2 = "P2";
std::string mz_arm(int stage);            // long arm of filter stage k
std::string forward_dump(int stage);      // unconnected merge port, outward pass
std::string return_dump(int stage);       // unconnected merge port, return pass
}  // namespace ports

/// Full description of the optical network.
struct ApparatusConfig {
  bool filtration = true;  ///< encoding/decoding interferometer present
  int n_pairs = 2;         ///< N: qubit spread over 2N time bins; power of two
  double bin_spacing_ns = 60.0;
  int mz_delay_bins = 2;   ///< first filter stage delay; stage k delays mz_delay_bins * 2^k
  double source_mu = 0.8;  ///< mean photon number of the attenuated coherent source
  bool single_photon_source = false;  ///< idealized single-photon statistics instead
  /// Multiplicative fringe-visibility factor (mode mismatch at the final
  /// recombination coupler); 1.0 = ideal.
  double fringe_visibility = 1.0;
  /// Extra phase variance a party's modulator adds to its bins when driven at
  /// a quadrature setting (pi/2 or 3pi/2); 0 = ideal modulators.
  double pm_quadrature_excess_sigma2 = 0.0;

  /// Throws std::invalid_argument listing every violated constraint.
  void validate() const;

  PhotonStatistics source_statistics() const;
  int stage_count() const;                 // log2(n_pairs) when filtration is on
  std::vector<int> stage_delays() const;   // mz_delay_bins * 2^k
  std::set<int> channel_bins() const;      // bins occupied in the channel (2N of them)
  int central_output_bin() const;          // gate default: sum of stage delays
  std::vector<int> output_bins() const;    // labels of the detector-plane bins
  /// Bins the receiver's modulator drives on the return pass (the
  /// H-polarized ones).
  std::set<int> return_modulated_bins() const;
};

/// The (time_bin, polarization) modes of the channel on the return leg, in
/// deterministic order: the mirror leaves V on the even replicas and H on the
/// phase-encoded ones.
std::vector<Mode> return_channel_modes(const ApparatusConfig& config);

/// Detector-plane field and bookkeeping for one round trip.
struct RoundTripResult {
  /// Coherent field at the detector inputs; modes are keyed by output bin
  /// label and path "P1"/"P2". Output label k means arrival one bin after the
  /// source pulse plus k (label = arrival bin - 1).
  FieldState detector_state;
  /// Amplitudes entering the final coupler, keyed by arrival bin:
  /// first = short-arm (toward P1 transmitted), second = long-arm.
  std::map<int, std::pair<Complex, Complex>> premerge;
  double loss_forward = 0.0;  ///< probability left in the outward-pass merge ports
  double loss_return = 0.0;   ///< probability left in the return-pass merge ports
  double fringe_visibility = 1.0;  ///< copied from the config for intensity()
};

/// Source pulse through the encoder to the channel (phases all zero);
/// deterministic per config, so callers cache it across Monte Carlo trials.
/// The returned state keeps the encoder's dump-port components so that
/// probability is conserved end to end.
FieldState forward_to_channel(const ApparatusConfig& config);

/// Mirror reflection, phase encoding phi_a, and one application of channel
/// noise (the noise acts once per round trip, at the far station).
FieldState alice_station(const FieldState& channel_state, const ApparatusConfig& config,
                         double phi_a, const NoiseSample& noise);

/// Return pass through the decoding interferometer, up to (not including) the
/// receiver's phase modulator. With filtration on this is the six-bin
/// (general: 4N-2 bin) interference pattern.
FieldState return_through_filter(const FieldState& returning, const ApparatusConfig& config);

/// Receiver's modulator (phi_b, plus optional per-bin extra phases), reverse
/// polarizing beamsplitter and final recombination into ports P1/P2.
RoundTripResult bob_measurement(const FieldState& at_bob_pm, const ApparatusConfig& config,
                                double phi_b, const PhaseSchedule& extra_pm_phases = {});

/// Full round trip. The noise sample must cover every channel bin the config
/// generates.
RoundTripResult propagate(const ApparatusConfig& config, double phi_a, double phi_b,
                          const NoiseSample& noise);

/// Probability mass in the gated output bin at the chosen port (single
/// photon), equivalently the fraction of the source intensity (coherent).
/// Applies the fringe-visibility factor to the interference cross term.
double intensity(const RoundTripResult& result, DetectorPort port, int gate_bin);

/// Sum of intensity over all output bins and both ports.
double detected_probability(const RoundTripResult& result);

struct VisibilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double mean_imax = 0.0;
  double mean_imin = 0.0;
  std::int64_t trials = 0;
};

/// Monte Carlo fringe visibility of the central output bin at port P1:
/// averages the intensity over noise samples at the matched (phi_a+phi_b = 0)
/// and opposed (= pi) settings and returns (Imax-Imin)/(Imax+Imin) with a
/// delta-method standard error. Reduction order is fixed, so the result is
/// bitwise independent of the thread count.
VisibilityEstimate estimate_visibility(const ApparatusConfig& config, double sigma2,
                                       std::int64_t trials, const StreamFactory& streams,
                                       int threads = 1);

}  // namespace tbqkd
