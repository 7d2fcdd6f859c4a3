#include <doctest.h>

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "tbqkd/photonic_state.hpp"
#include "tbqkd/rng.hpp"

using namespace tbqkd;
using namespace std::complex_literals;

namespace {

FieldState random_state(RngStream& rng, int n_modes = 6) {
  FieldState s{SinglePhoton{}};
  double norm = 0.0;
  std::vector<std::pair<Mode, Complex>> entries;
  for (int i = 0; i < n_modes; ++i) {
    const Mode m{static_cast<int>(rng.next_u64() % 8),
                 rng.next_bit() != 0 ? Polarization::V : Polarization::H,
                 rng.next_bit() != 0 ? "a" : "b"};
    const Complex amp{rng.next_gaussian(), rng.next_gaussian()};
    entries.emplace_back(m, amp);
    norm += std::norm(amp);
  }
  const double scale = 1.0 / std::sqrt(norm);
  for (auto& [m, amp] : entries) s.accumulate(m, scale * amp);
  return s;
}

}  // namespace

TEST_CASE("new_pulse basics") {
  const FieldState s = new_pulse(0, Polarization::H, "src", 1.0 + 0.0i, SinglePhoton{});
  CHECK(s.amplitudes().size() == 1);
  CHECK(s.total_probability() == doctest::Approx(1.0));

  const FieldState half = new_pulse(0, Polarization::H, "src", 0.5 + 0.0i, SinglePhoton{});
  CHECK(half.total_probability() == doctest::Approx(0.25));

  const FieldState coh = new_pulse(0, Polarization::H, "src", 1.0 + 0.0i, Coherent{0.8});
  CHECK(mean_photon_number(coh.statistics()) == doctest::Approx(0.8));
  CHECK(!is_single_photon(coh.statistics()));
}

TEST_CASE("new_pulse rejects invalid inputs") {
  CHECK_THROWS_AS(new_pulse(-1, Polarization::H, "src", 1.0, SinglePhoton{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(new_pulse(0, Polarization::H, "src", 1.0, Coherent{-0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(new_pulse(0, Polarization::H, "src", 1.5 + 0.0i, SinglePhoton{}),
                  std::invalid_argument);
}

TEST_CASE("total_probability") {
  CHECK(FieldState{}.total_probability() == 0.0);

  FieldState s{SinglePhoton{}};
  s.accumulate(Mode{0, Polarization::H, "a"}, 1.0 / std::sqrt(2.0));
  s.accumulate(Mode{1, Polarization::H, "a"}, 1.0i / std::sqrt(2.0));
  CHECK(s.total_probability() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("project_window") {
  RngStream rng = StreamFactory{11}.stream(0);
  const FieldState s = random_state(rng);

  // Full support: unchanged.
  const FieldState full = s.project_window({0, 1, 2, 3, 4, 5, 6, 7}, "a");
  FieldState other = s.project_window({0, 1, 2, 3, 4, 5, 6, 7}, "b");
  CHECK(full.total_probability() + other.total_probability() ==
        doctest::Approx(s.total_probability()).epsilon(1e-12));
  for (const auto& [mode, amp] : full.amplitudes()) CHECK(amp == s.amplitude(mode));

  // Disjoint bins: empty.
  const FieldState none = s.project_window({100, 101}, "a");
  CHECK(none.empty());
  CHECK(none.total_probability() == 0.0);
}

TEST_CASE("overlap") {
  const FieldState a = new_pulse(0, Polarization::H, "src", 0.6 + 0.3i, SinglePhoton{});
  CHECK(overlap(a, a).real() == doctest::Approx(a.total_probability()));
  CHECK(overlap(a, a).imag() == doctest::Approx(0.0));

  const FieldState b = new_pulse(1, Polarization::H, "src", 1.0, SinglePhoton{});
  CHECK(std::abs(overlap(a, b)) == 0.0);

  const FieldState coh = new_pulse(0, Polarization::H, "src", 1.0, Coherent{0.8});
  CHECK_THROWS_AS(overlap(a, coh), std::invalid_argument);

  // Conjugate symmetry on random states.
  RngStream rng = StreamFactory{12}.stream(0);
  for (int trial = 0; trial < 20; ++trial) {
    const FieldState x = random_state(rng);
    const FieldState y = random_state(rng);
    CHECK(overlap(x, y) == std::conj(overlap(y, x)));
  }
}

TEST_CASE("pruning keeps probabilities") {
  FieldState s{SinglePhoton{}};
  s.accumulate(Mode{0, Polarization::H, "a"}, 0.8);
  s.accumulate(Mode{1, Polarization::H, "a"}, 1e-16);
  s.accumulate(Mode{2, Polarization::H, "a"}, 1e-17 * 1.0i);
  const FieldState p = s.pruned();
  CHECK(p.amplitudes().size() == 1);
  CHECK(std::abs(p.total_probability() - s.total_probability()) < 1e-12);
}
