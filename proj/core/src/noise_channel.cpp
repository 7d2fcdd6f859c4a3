#include "tbqkd/noise_channel.hpp"

#include <cmath>
#include <stdexcept>

#include "tbqkd/optical_elements.hpp"

namespace tbqkd {

namespace {
void require_valid_sigma2(double sigma2) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("noise model: sigma2 must be finite and >= 0");
}
}  // namespace

NoiseSample sample_phases(const NoiseModel& model, const std::set<int>& bins, RngStream& rng) {
  require_valid_sigma2(model.sigma2);
  const double stddev = std::sqrt(model.sigma2);
  NoiseSample out;
  for (const int bin : bins) out.phases[bin] = stddev * rng.next_gaussian();
  return out;
}

FieldState apply_noise(const FieldState& s, const NoiseSample& sample, std::string_view path) {
  return phase_modulator(s, path, PhaseSchedule{sample.phases});
}

double mixing_coefficient(double sigma2) {
  require_valid_sigma2(sigma2);
  return std::exp(-sigma2);
}

double visibility_unfiltered(double sigma2) { return mixing_coefficient(sigma2); }

double ber_unfiltered(double sigma2) { return (1.0 - mixing_coefficient(sigma2)) / 2.0; }

double visibility_filtered(int n_pairs, double sigma2) {
  if (n_pairs < 1) throw std::invalid_argument("visibility_filtered: n_pairs must be >= 1");
  require_valid_sigma2(sigma2);
  const double n = static_cast<double>(n_pairs);
  return n / (n - 1.0 + std::exp(sigma2));
}

}  // namespace tbqkd
