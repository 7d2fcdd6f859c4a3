#pragma once

#include <map>
#include <string>
#include <string_view>

#include "tbqkd/photonic_state.hpp"

namespace tbqkd {

/// Directional 2x2 fiber coupler joining the lines `port_a` and `port_b`.
/// Transfer matrix [[sqrt(t), i*sqrt(1-t)], [i*sqrt(1-t), sqrt(t)]]: the
/// reflected (cross) amplitude picks up the conventional pi/2 phase. The
/// matrix is symmetric, so the same spec serves both traversal directions.
struct CouplerSpec {
  std::string port_a;
  std::string port_b;
  double transmittance = 0.5;
};

/// Per-time-bin phase map for a modulator; bins absent from the map get 0.
struct PhaseSchedule {
  std::map<int, double> phase_by_bin;

  double at(int bin) const {
    const auto it = phase_by_bin.find(bin);
    return it == phase_by_bin.end() ? 0.0 : it->second;
  }
};

/// Couple every (time_bin, pol) amplitude pair on (port_a, port_b); modes on
/// other paths pass through unchanged.
FieldState coupler(const FieldState& s, const CouplerSpec& spec);

/// Polarizing beamsplitter, forward (merging) direction: H on `port_h` is
/// transmitted to `port_out` (factor 1), V on `port_v` is reflected to
/// `port_out` (factor i). A mode with the wrong polarization on an input port
/// is a configuration error.
FieldState pbs(const FieldState& s, std::string_view port_h, std::string_view port_v,
               std::string_view port_out);

/// The same element traversed backward: H on `port_out` routes to `port_h`
/// (factor 1), V on `port_out` routes to `port_v` (factor i).
FieldState pbs_reversed(const FieldState& s, std::string_view port_out, std::string_view port_h,
                        std::string_view port_v);

/// Shift every mode on `path` forward in time by `bins` (>= 0) bin slots.
FieldState delay(const FieldState& s, std::string_view path, int bins);

/// Multiply the amplitude of mode (b, pol, path) by exp(i * sched(b)).
FieldState phase_modulator(const FieldState& s, std::string_view path, const PhaseSchedule& sched);

/// Reflect the light on `path`, interchanging H and V. The caller replays the
/// network in reverse order afterwards.
FieldState faraday_mirror(const FieldState& s, std::string_view path);

/// Scale every amplitude by sqrt(factor), factor in [0, 1]. For coherent
/// statistics this is equivalent to rescaling the mean photon number.
FieldState attenuator(const FieldState& s, double factor);

}  // namespace tbqkd
