#pragma once

#include <cstdint>

#include "tbqkd/apparatus.hpp"
#include "tbqkd/photonic_state.hpp"
#include "tbqkd/rng.hpp"

namespace tbqkd {

/// Gated threshold (non-number-resolving) single-photon detector.
struct DetectorConfig {
  double efficiency = 0.1;  ///< eta
  double dark_prob = 0.0;   ///< dark-count probability per gate
  int gate_bin = 0;         ///< output bin label the gate selects

  void validate() const;
};

/// Click probability for a gate capturing the fraction `intensity` of the
/// source. Coherent(mu): 1 - (1-d) exp(-eta mu I); single photon:
/// 1 - (1-d)(1 - eta I).
double click_probability(double intensity, const PhotonStatistics& statistics,
                         const DetectorConfig& det);

/// Bernoulli(p) draw.
bool sample_click(double p, RngStream& rng);

/// Smallest dark_prob at which the expected sifted raw error rate of a
/// session over `apparatus` with channel variance `sigma2` reaches
/// `target_raw_error`. The raw error is evaluated on noise-averaged expected
/// click probabilities over `trials` fixed noise samples; bisection to 1e-6
/// on dark_prob. Throws when the target is unreachable in [0, 1].
double calibrate_dark_for_raw_error(double target_raw_error, const ApparatusConfig& apparatus,
                                    const DetectorConfig& det, double sigma2, std::int64_t trials,
                                    const StreamFactory& streams, int threads = 1);

}  // namespace tbqkd
