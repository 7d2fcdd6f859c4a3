#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "tbqkd/qkd_protocol.hpp"

using namespace tbqkd;

namespace {

constexpr double kPi = std::numbers::pi;

ApparatusConfig ideal_single_photon(int n_pairs) {
  ApparatusConfig c;
  c.filtration = n_pairs > 1;
  c.n_pairs = n_pairs;
  c.single_photon_source = true;
  return c;
}

DetectorConfig perfect_detector(const ApparatusConfig& apparatus) {
  DetectorConfig det;
  det.efficiency = 1.0;
  det.dark_prob = 0.0;
  det.gate_bin = apparatus.central_output_bin();
  return det;
}

}  // namespace

TEST_CASE("security classification zones") {
  CHECK(classify(0.0) == SecurityZone::Secure);
  CHECK(classify(0.109) == SecurityZone::Secure);
  CHECK(classify(0.110) == SecurityZone::Unknown);
  CHECK(classify(0.120) == SecurityZone::Unknown);
  CHECK(classify(0.1459) == SecurityZone::Unknown);
  CHECK(classify(0.146) == SecurityZone::Insecure);
  CHECK(classify(0.30) == SecurityZone::Insecure);

  CHECK_THROWS_AS(classify(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(classify(0.51), std::invalid_argument);
  CHECK_THROWS_AS(classify(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);

  // Visibility equivalents: V > 78.0% is secure, V <= 70.7% insecure.
  CHECK(classify((1.0 - 0.781) / 2.0) == SecurityZone::Secure);
  CHECK(classify((1.0 - 0.779) / 2.0) == SecurityZone::Unknown);
  CHECK(classify((1.0 - SecurityThresholds::kVisibilityInsecure) / 2.0) ==
        SecurityZone::Insecure);
}

TEST_CASE("noise-free session decodes perfectly") {
  const ApparatusConfig apparatus = ideal_single_photon(1);
  const auto records =
      run_session(apparatus, NoiseModel{0.0}, perfect_detector(apparatus), EveModel::none(),
                  5000, DetectorPort::P1, StreamFactory{61}, 0);
  const auto sifted = sift(records);
  REQUIRE(!sifted.empty());
  const BerEstimate est = estimate_ber(sifted);
  CHECK(est.mismatches == 0);
  CHECK(est.ber == 0.0);
}

TEST_CASE("monitoring the complementary port flips the decode rule, not the errors") {
  const ApparatusConfig apparatus = ideal_single_photon(1);
  const auto records =
      run_session(apparatus, NoiseModel{0.0}, perfect_detector(apparatus), EveModel::none(),
                  5000, DetectorPort::P2, StreamFactory{62}, 0);
  const auto sifted = sift(records);
  REQUIRE(!sifted.empty());
  CHECK(estimate_ber(sifted).mismatches == 0);
}

TEST_CASE("sifting") {
  std::vector<RoundRecord> records;
  RoundRecord r;
  r.clicked = false;
  records.push_back(r);  // no click: dropped
  r.clicked = true;
  r.alice_basis = 0;
  r.bob_basis = 1;
  records.push_back(r);  // basis mismatch: dropped
  r.bob_basis = 0;
  r.alice_bit = 1;
  r.monitored_port = DetectorPort::P1;
  records.push_back(r);  // kept: bob decodes 0 on P1, basis 0
  const auto sifted = sift(records);
  REQUIRE(sifted.size() == 1);
  CHECK(sifted[0].first == 1);
  CHECK(sifted[0].second == 0);

  CHECK(sift({}).empty());
}

TEST_CASE("about half of the clicked rounds survive sifting") {
  const ApparatusConfig apparatus = ideal_single_photon(1);
  const auto records =
      run_session(apparatus, NoiseModel{0.4}, perfect_detector(apparatus), EveModel::none(),
                  40000, DetectorPort::P1, StreamFactory{63}, 0);
  std::int64_t clicked = 0;
  for (const auto& r : records) clicked += r.clicked ? 1 : 0;
  const auto sifted = sift(records);
  const double frac = static_cast<double>(sifted.size()) / static_cast<double>(clicked);
  const double se = std::sqrt(0.25 / static_cast<double>(clicked));
  CHECK(std::abs(frac - 0.5) < 3.0 * se);
}

TEST_CASE("ber estimate with Wilson interval") {
  std::vector<std::pair<int, int>> sifted;
  for (int i = 0; i < 100; ++i) sifted.emplace_back(0, 0);
  BerEstimate est = estimate_ber(sifted);
  CHECK(est.ber == 0.0);
  CHECK(est.ci95 > 0.0);

  sifted.clear();
  for (int i = 0; i < 5000; ++i) sifted.emplace_back(0, 0);
  for (int i = 0; i < 5000; ++i) sifted.emplace_back(0, 1);
  est = estimate_ber(sifted);
  CHECK(est.ber == doctest::Approx(0.5));
  CHECK(est.ci95 == doctest::Approx(0.0098).epsilon(0.01));

  CHECK_THROWS_AS(estimate_ber({}), std::invalid_argument);
}

TEST_CASE("session BER tracks the closed forms (visibility duality)") {
  const StreamFactory streams{64};

  ApparatusConfig plain = ideal_single_photon(1);
  auto records = run_session(plain, NoiseModel{0.25}, perfect_detector(plain), EveModel::none(),
                             200000, DetectorPort::P1, streams.scoped("plain"), 0);
  BerEstimate est = estimate_ber(sift(records));
  const double expected_plain = (1.0 - visibility_unfiltered(0.25)) / 2.0;
  CHECK(std::abs(est.ber - expected_plain) < 3.0 * est.ci95 / 1.96);

  ApparatusConfig filtered = ideal_single_photon(2);
  records = run_session(filtered, NoiseModel{0.5}, perfect_detector(filtered), EveModel::none(),
                        400000, DetectorPort::P1, streams.scoped("filtered"), 0);
  est = estimate_ber(sift(records));
  const double expected_filtered = (1.0 - visibility_filtered(2, 0.5)) / 2.0;
  CHECK(std::abs(est.ber - expected_filtered) < 3.0 * est.ci95 / 1.96);
}

TEST_CASE("dark-only clicks carry no information") {
  ApparatusConfig apparatus = ideal_single_photon(1);
  apparatus.single_photon_source = false;
  apparatus.source_mu = 0.0;  // vacuum source: every click is a dark count
  DetectorConfig det = perfect_detector(apparatus);
  det.efficiency = 0.1;
  det.dark_prob = 0.05;
  const auto records = run_session(apparatus, NoiseModel{0.0}, det, EveModel::none(), 100000,
                                   DetectorPort::P1, StreamFactory{65}, 0);
  const BerEstimate est = estimate_ber(sift(records));
  CHECK(std::abs(est.ber - 0.5) < 3.0 * est.ci95 / 1.96);
}

TEST_CASE("quadrature modulator penalty raises the error rate") {
  ApparatusConfig apparatus = ideal_single_photon(1);
  const auto clean = run_session(apparatus, NoiseModel{0.0}, perfect_detector(apparatus),
                                 EveModel::none(), 20000, DetectorPort::P1, StreamFactory{66}, 0);
  CHECK(estimate_ber(sift(clean)).ber == 0.0);

  apparatus.pm_quadrature_excess_sigma2 = 0.4;
  const auto noisy = run_session(apparatus, NoiseModel{0.0}, perfect_detector(apparatus),
                                 EveModel::none(), 20000, DetectorPort::P1, StreamFactory{66}, 0);
  CHECK(estimate_ber(sift(noisy)).ber > 0.0);
}

TEST_CASE("sessions are reproducible and thread-count independent") {
  const ApparatusConfig apparatus = ideal_single_photon(2);
  const auto a = run_session(apparatus, NoiseModel{0.3}, perfect_detector(apparatus),
                             EveModel::none(), 20000, DetectorPort::P1, StreamFactory{67}, 1);
  const auto b = run_session(apparatus, NoiseModel{0.3}, perfect_detector(apparatus),
                             EveModel::none(), 20000, DetectorPort::P1, StreamFactory{67}, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].clicked == b[i].clicked);
    CHECK(a[i].alice_bit == b[i].alice_bit);
    CHECK(a[i].phi_a == b[i].phi_a);
  }
}

TEST_CASE("eve analysis: no replacement reduces to the noise-only channel") {
  const ApparatusConfig apparatus = ideal_single_photon(2);
  const double sigma2 = 0.4;
  const EveReport report =
      eve_replacement_analysis(apparatus, sigma2, 0.0, 30000, StreamFactory{68}, 0);
  const double expected = (1.0 - visibility_filtered(2, sigma2)) / 2.0;
  CHECK(std::abs(report.ber_with_eve - expected) < 3.0 * report.ber_std_error);
}

TEST_CASE("eve analysis: replaced rounds survive filtration less often") {
  const ApparatusConfig apparatus = ideal_single_photon(2);
  const EveReport report =
      eve_replacement_analysis(apparatus, 0.0, 0.5, 30000, StreamFactory{69}, 0);
  CHECK(report.yield_legit == doctest::Approx(0.25).epsilon(1e-9));
  // Legitimate light interferes constructively; random light loses half.
  CHECK(report.yield_replaced < report.yield_legit -
                                    3.0 * (report.yield_legit_se + report.yield_replaced_se));
  CHECK(report.yield_legit / report.yield_replaced == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("eve ber grows with the replacement probability") {
  const ApparatusConfig apparatus = ideal_single_photon(2);
  double prev = -1.0;
  for (const double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const EveReport report =
        eve_replacement_analysis(apparatus, 0.2, p, 20000, StreamFactory{70}, 0);
    CHECK(report.ber_with_eve > prev);
    prev = report.ber_with_eve;
  }
}

TEST_CASE("random replacement at half rate mimics a 50% mixing channel") {
  // Plain two-bin setup: Eve's half-rate replacement ensemble produces the
  // same mean detection probabilities as phase noise with e^{-sigma2} = 1/2.
  const ApparatusConfig apparatus = ideal_single_photon(1);
  const std::vector<double> phi_a{0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};
  const std::vector<double> phi_b{0.0, kPi / 2.0};
  const std::int64_t trials = 100000;

  const FringeStats attack =
      fringe_statistics(apparatus, NoiseModel{0.0}, EveModel::random_replacement(0.5), phi_a,
                        phi_b, trials, StreamFactory{71}.scoped("attack"), 0);
  const FringeStats noisy =
      fringe_statistics(apparatus, NoiseModel{std::log(2.0)}, EveModel::none(), phi_a, phi_b,
                        trials, StreamFactory{71}.scoped("noise"), 0);

  for (std::size_t a = 0; a < phi_a.size(); ++a) {
    for (std::size_t b = 0; b < phi_b.size(); ++b) {
      for (const DetectorPort port : {DetectorPort::P1, DetectorPort::P2}) {
        const std::size_t cell = attack.index(a, b, port);
        const double joint =
            std::sqrt(attack.std_error[cell] * attack.std_error[cell] +
                      noisy.std_error[cell] * noisy.std_error[cell]);
        CHECK(std::abs(attack.mean[cell] - noisy.mean[cell]) < 3.5 * joint);
        // And both match the closed form (1 +- cos/2)/2.
        const double expected =
            0.5 + (port == DetectorPort::P1 ? 0.25 : -0.25) * std::cos(phi_a[a] + phi_b[b]);
        CHECK(std::abs(attack.mean[cell] - expected) < 3.5 * attack.std_error[cell] + 1e-9);
      }
    }
  }
}
