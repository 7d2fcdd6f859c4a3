#pragma once

#include <compare>
#include <complex>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>

namespace tbqkd {

using Complex = std::complex<double>;

enum class Polarization : unsigned char { H, V };

constexpr Polarization complement(Polarization p) {
  return p == Polarization::H ? Polarization::V : Polarization::H;
}

constexpr char to_char(Polarization p) { return p == Polarization::H ? 'H' : 'V'; }

/// One optical mode: a time bin (units of the bin spacing, t_i = i*delta) on a
/// named fiber segment, with a two-valued polarization label.
struct Mode {
  int time_bin = 0;
  Polarization pol = Polarization::H;
  std::string path;

  friend auto operator<=>(const Mode&, const Mode&) = default;
};

/// Photon statistics of the source feeding a field state.
struct SinglePhoton {
  friend bool operator==(const SinglePhoton&, const SinglePhoton&) { return true; }
};
struct Coherent {
  double mean_photons = 0.0;  // mean photon number at the source
  friend bool operator==(const Coherent&, const Coherent&) = default;
};
using PhotonStatistics = std::variant<SinglePhoton, Coherent>;

bool is_single_photon(const PhotonStatistics& s);
double mean_photon_number(const PhotonStatistics& s);  // 1.0 for SinglePhoton

/// Amplitudes below this magnitude may be dropped by pruned().
inline constexpr double kPruneThreshold = 1e-15;

/// Sparse mode-indexed complex amplitude vector. Loss shows up as
/// total_probability() < 1 rather than as explicit loss modes. Values are
/// treated as immutable once shared; every transform returns a new state.
class FieldState {
 public:
  using AmplitudeMap = std::map<Mode, Complex>;

  FieldState() = default;
  explicit FieldState(PhotonStatistics statistics) : statistics_(std::move(statistics)) {}

  const AmplitudeMap& amplitudes() const { return amplitudes_; }
  const PhotonStatistics& statistics() const { return statistics_; }
  bool empty() const { return amplitudes_.empty(); }

  /// Amplitude of a mode, zero when absent.
  Complex amplitude(const Mode& mode) const;

  /// Add an amplitude contribution to a mode (builder for transforms/tests).
  void accumulate(Mode mode, Complex amplitude);

  /// Sum of |a|^2 over all modes; survival probability for single photons.
  double total_probability() const;

  /// Restriction to modes with time_bin in `bins` on `path`; amplitudes kept
  /// as-is (post-selection without renormalization).
  FieldState project_window(const std::set<int>& bins, std::string_view path) const;

  /// Copy without amplitudes of magnitude below `min_magnitude`.
  FieldState pruned(double min_magnitude = kPruneThreshold) const;

 private:
  AmplitudeMap amplitudes_;
  PhotonStatistics statistics_ = SinglePhoton{};
};

/// State with a single occupied mode.
/// Rejects negative time bins, negative mean photon numbers, and single-photon
/// amplitudes with |amp| > 1.
FieldState new_pulse(int time_bin, Polarization pol, std::string path, Complex amplitude,
                     PhotonStatistics statistics);

/// sum_m conj(a_m) * b_m. Requires identical statistics tags.
Complex overlap(const FieldState& a, const FieldState& b);

}  // namespace tbqkd
