#pragma once

#include <map>
#include <set>
#include <string_view>

#include "tbqkd/photonic_state.hpp"
#include "tbqkd/rng.hpp"

namespace tbqkd {

/// Gaussian phase-noise channel of variance sigma2 (radians^2), independent
/// across time bins. The gaussian is sampled unwrapped (support on all reals).
struct NoiseModel {
  double sigma2 = 0.0;
};

/// One realization: a phase per time bin.
struct NoiseSample {
  std::map<int, double> phases;
};

/// One i.i.d. N(0, sigma2) draw per requested bin, in ascending bin order.
/// sigma2 = 0 yields exact zeros.
NoiseSample sample_phases(const NoiseModel& model, const std::set<int>& bins, RngStream& rng);

/// Apply the sampled phases on `path`; same as phase_modulator with the
/// sampled schedule.
FieldState apply_noise(const FieldState& s, const NoiseSample& sample, std::string_view path);

/// Weight e^{-sigma2} of the surviving coherent component when the channel is
/// averaged over phases: rho = e^{-s2} |psi><psi| + (1 - e^{-s2}) I/2.
double mixing_coefficient(double sigma2);

/// Fringe visibility without filtration, e^{-sigma2}.
double visibility_unfiltered(double sigma2);

/// Bit error rate without filtration, (1 - e^{-sigma2})/2 = (1 - V)/2.
double ber_unfiltered(double sigma2);

/// Central-bin visibility when the qubit is spread over 2N bins and
/// recombined interferometrically: N / (N - 1 + e^{sigma2}). N = 1 degenerates
/// to the unfiltered value; N = 2 is the standard filtration setup.
double visibility_filtered(int n_pairs, double sigma2);

}  // namespace tbqkd
