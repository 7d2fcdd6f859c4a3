#include "tbqkd/optical_elements.hpp"

#include <cmath>
#include <stdexcept>

namespace tbqkd {

namespace {
constexpr Complex kImag{0.0, 1.0};
}

FieldState coupler(const FieldState& s, const CouplerSpec& spec) {
  if (spec.port_a == spec.port_b)
    throw std::invalid_argument("coupler: port_a and port_b must differ");
  if (!(spec.transmittance >= 0.0 && spec.transmittance <= 1.0))
    throw std::invalid_argument("coupler: transmittance must be in [0, 1]");

  const double t = std::sqrt(spec.transmittance);
  const Complex r = kImag * std::sqrt(1.0 - spec.transmittance);

  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == spec.port_a) {
      out.accumulate(mode, t * amp);
      out.accumulate(Mode{mode.time_bin, mode.pol, spec.port_b}, r * amp);
    } else if (mode.path == spec.port_b) {
      out.accumulate(mode, t * amp);
      out.accumulate(Mode{mode.time_bin, mode.pol, spec.port_a}, r * amp);
    } else {
      out.accumulate(mode, amp);
    }
  }
  return out;
}

FieldState pbs(const FieldState& s, std::string_view port_h, std::string_view port_v,
               std::string_view port_out) {
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == port_h) {
      if (mode.pol != Polarization::H)
        throw std::invalid_argument("pbs: V-polarized mode on the H input port");
      out.accumulate(Mode{mode.time_bin, mode.pol, std::string(port_out)}, amp);
    } else if (mode.path == port_v) {
      if (mode.pol != Polarization::V)
        throw std::invalid_argument("pbs: H-polarized mode on the V input port");
      out.accumulate(Mode{mode.time_bin, mode.pol, std::string(port_out)}, kImag * amp);
    } else {
      out.accumulate(mode, amp);
    }
  }
  return out;
}

FieldState pbs_reversed(const FieldState& s, std::string_view port_out, std::string_view port_h,
                        std::string_view port_v) {
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == port_out) {
      if (mode.pol == Polarization::H)
        out.accumulate(Mode{mode.time_bin, mode.pol, std::string(port_h)}, amp);
      else
        out.accumulate(Mode{mode.time_bin, mode.pol, std::string(port_v)}, kImag * amp);
    } else {
      out.accumulate(mode, amp);
    }
  }
  return out;
}

FieldState delay(const FieldState& s, std::string_view path, int bins) {
  if (bins < 0) throw std::invalid_argument("delay: negative delay");
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == path)
      out.accumulate(Mode{mode.time_bin + bins, mode.pol, mode.path}, amp);
    else
      out.accumulate(mode, amp);
  }
  return out;
}

FieldState phase_modulator(const FieldState& s, std::string_view path,
                           const PhaseSchedule& sched) {
  for (const auto& [bin, phase] : sched.phase_by_bin) {
    if (!std::isfinite(phase)) throw std::invalid_argument("phase_modulator: non-finite phase");
  }
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == path) {
      const double phi = sched.at(mode.time_bin);
      out.accumulate(mode, amp * std::polar(1.0, phi));
    } else {
      out.accumulate(mode, amp);
    }
  }
  return out;
}

FieldState faraday_mirror(const FieldState& s, std::string_view path) {
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) {
    if (mode.path == path)
      out.accumulate(Mode{mode.time_bin, complement(mode.pol), mode.path}, amp);
    else
      out.accumulate(mode, amp);
  }
  return out;
}

FieldState attenuator(const FieldState& s, double factor) {
  if (!(factor >= 0.0 && factor <= 1.0))
    throw std::invalid_argument("attenuator: factor must be in [0, 1]");
  const double scale = std::sqrt(factor);
  FieldState out(s.statistics());
  for (const auto& [mode, amp] : s.amplitudes()) out.accumulate(mode, scale * amp);
  return out;
}

}  // namespace tbqkd
