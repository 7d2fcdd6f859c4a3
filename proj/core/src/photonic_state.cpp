#include "tbqkd/photonic_state.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace tbqkd {

bool is_single_photon(const PhotonStatistics& s) {
  return std::holds_alternative<SinglePhoton>(s);
}

double mean_photon_number(const PhotonStatistics& s) {
  if (const auto* c = std::get_if<Coherent>(&s)) return c->mean_photons;
  return 1.0;
}

Complex FieldState::amplitude(const Mode& mode) const {
  const auto it = amplitudes_.find(mode);
  return it == amplitudes_.end() ? Complex{0.0, 0.0} : it->second;
}

void FieldState::accumulate(Mode mode, Complex amplitude) {
  if (amplitude == Complex{0.0, 0.0}) return;
  amplitudes_[std::move(mode)] += amplitude;
}

double FieldState::total_probability() const {
  double total = 0.0;
  for (const auto& [mode, amp] : amplitudes_) total += std::norm(amp);
  return total;
}

FieldState FieldState::project_window(const std::set<int>& bins, std::string_view path) const {
  FieldState out(statistics_);
  for (const auto& [mode, amp] : amplitudes_) {
    if (mode.path == path && bins.count(mode.time_bin) != 0) out.accumulate(mode, amp);
  }
  return out;
}

FieldState FieldState::pruned(double min_magnitude) const {
  FieldState out(statistics_);
  for (const auto& [mode, amp] : amplitudes_) {
    if (std::abs(amp) >= min_magnitude) out.accumulate(mode, amp);
  }
  return out;
}

FieldState new_pulse(int time_bin, Polarization pol, std::string path, Complex amplitude,
                     PhotonStatistics statistics) {
  if (time_bin < 0) throw std::invalid_argument("new_pulse: time_bin must be non-negative");
  if (const auto* c = std::get_if<Coherent>(&statistics)) {
    if (!(c->mean_photons >= 0.0))
      throw std::invalid_argument("new_pulse: mean photon number must be >= 0");
  }
  if (is_single_photon(statistics) && std::abs(amplitude) > 1.0 + 1e-12)
    throw std::invalid_argument("new_pulse: single-photon amplitude must satisfy |amp| <= 1");
  FieldState out(std::move(statistics));
  out.accumulate(Mode{time_bin, pol, std::move(path)}, amplitude);
  return out;
}

Complex overlap(const FieldState& a, const FieldState& b) {
  if (a.statistics() != b.statistics())
    throw std::invalid_argument("overlap: mismatched statistics tags");
  // Iterate the smaller support.
  const FieldState& lhs = a.amplitudes().size() <= b.amplitudes().size() ? a : b;
  const FieldState& rhs = &lhs == &a ? b : a;
  Complex sum{0.0, 0.0};
  for (const auto& [mode, amp] : lhs.amplitudes()) {
    const Complex other = rhs.amplitude(mode);
    if (&lhs == &a)
      sum += std::conj(amp) * other;
    else
      sum += std::conj(other) * amp;
  }
  return sum;
}

}  // namespace tbqkd
