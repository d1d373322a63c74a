#include <catch2/catch_amalgamated.hpp>

#include "qgauge/twin.hpp"

using namespace qgauge;

namespace {

RealMatrix rotation2(double theta) {
  RealMatrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

}  // namespace

TEST_CASE("make_entangler produces orthogonal distribution-preserving maps") {
  Entangler e = make_entangler(3, 11, 0.9);
  CHECK((e.q.transpose() * e.q - RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((e.q * e.q.transpose() - RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(std::abs(e.q.determinant()) - 1.0) <= 1e-10);
  CHECK((e.q - RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() > 1e-3);

  Entangler trivial = make_entangler(3, 11, 0.0);
  CHECK((trivial.q - RealMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("d = 2 entangler is a planar rotation by angle_scale") {
  Entangler e = make_entangler(2, 5, M_PI / 4.0);
  // trace of a 2D rotation determines the angle up to sign
  CHECK(e.q.trace() == Catch::Approx(2.0 * std::cos(M_PI / 4.0)).epsilon(1e-12));
  CHECK(e.q.determinant() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("theorem hypothesis d > 1 is enforced") {
  CHECK_THROWS_AS(make_entangler(1, 0, 0.5), hypothesis_violation_error);
}

TEST_CASE("distribution invariance: analytic and empirical gaps") {
  Entangler identity{RealMatrix::Identity(2, 2), 0};
  DistributionInvarianceReport trivial = check_distribution_invariance(identity, 2000, 1);
  CHECK(trivial.analytic_gap == 0.0);
  CHECK(trivial.empirical_gap == 0.0);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Entangler e = make_entangler(3, seed, 1.2);
    DistributionInvarianceReport r = check_distribution_invariance(e, 10000, 5);
    REQUIRE(r.analytic_gap <= 1e-12);
    REQUIRE(r.empirical_gap <= 0.15);
  }
  CHECK_THROWS_AS(check_distribution_invariance(identity, 10, 0), invalid_input_error);
}

TEST_CASE("map_complexity closed forms") {
  CHECK(map_complexity(RealMatrix::Identity(3, 3)) == 0.0);
  CHECK(map_complexity(rotation2(M_PI / 4.0)) ==
        Catch::Approx((M_PI / 4.0) * std::sqrt(2.0)).epsilon(1e-12));
  RealMatrix stretch(2, 2);
  stretch << 2.0, 0.0, 0.0, 0.5;
  CHECK(map_complexity(stretch) == Catch::Approx(std::sqrt(2.0) * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("map_complexity axioms") {
  auto rng = seeded_engine(123);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    RealMatrix m(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = gauss(rng) * 0.3 + (i == j ? 1.0 : 0.0);
    // stay on the principal branch: positive determinant, well conditioned
    if (m.determinant() < 1e-2) continue;
    double c = map_complexity(m);
    REQUIRE(c > 0.0);
    REQUIRE(map_complexity(m.inverse()) == Catch::Approx(c).margin(1e-10));
  }
}

TEST_CASE("empirical triangle sanity for small rotations") {
  std::uint64_t seed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Entangler a = make_entangler(3, ++seed, 0.7);
    Entangler b = make_entangler(3, ++seed, 0.6);
    double lhs = map_complexity(a.q * b.q);
    REQUIRE(lhs <= map_complexity(a.q) + map_complexity(b.q) + 1e-10);
  }
}

TEST_CASE("map_complexity error paths") {
  CHECK_THROWS_AS(map_complexity(rotation2(M_PI)), branch_ambiguity_error);
  CHECK_THROWS_AS(map_complexity(RealMatrix::Zero(2, 2)), invalid_input_error);
}

TEST_CASE("round trips reconstruct exactly and compose complexities") {
  LinearGenerator identity{RealMatrix::Identity(2, 2)};
  RoundTrip base = round_trip_complexity(identity);
  CHECK(base.complexity == 0.0);

  Entangler rot{rotation2(M_PI / 4.0), 0};
  RoundTrip twisted = round_trip_complexity(identity, &rot);
  CHECK(twisted.complexity ==
        Catch::Approx(2.0 * (M_PI / 4.0) * std::sqrt(2.0)).epsilon(1e-12));

  RealMatrix g(2, 2);
  g << 1.3, 0.2, -0.4, 0.9;
  LinearGenerator gen{g};
  for (const Entangler* e : {static_cast<const Entangler*>(nullptr),
                             static_cast<const Entangler*>(&rot)}) {
    RoundTrip rt = round_trip_complexity(gen, e);
    REQUIRE((rt.decoder * rt.encoder - RealMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <=
            1e-10);
  }
}

TEST_CASE("decoder-only pushforwards are identical (claim 1)") {
  RealMatrix g(2, 2);
  g << 2.0, 0.0, 0.0, 0.5;
  LinearGenerator gen{g};
  Entangler rot{rotation2(M_PI / 3.0), 0};
  RoundTrip plain = round_trip_complexity(gen);
  RoundTrip twisted = round_trip_complexity(gen, &rot);
  RealMatrix push_plain = plain.decoder * plain.decoder.transpose();
  RealMatrix push_twisted = twisted.decoder * twisted.decoder.transpose();
  CHECK((push_plain - push_twisted).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("discrimination verdicts (claims 2 and 3)") {
  LinearGenerator identity{RealMatrix::Identity(2, 2)};
  Entangler rot{rotation2(M_PI / 4.0), 0};
  TwinReport report = discriminate_representations(identity, rot);
  CHECK(report.verdict == TwinVerdict::z);
  CHECK(report.complexity_gap ==
        Catch::Approx(2.0 * (M_PI / 4.0) * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(report.decoder_gap <= 1e-12);

  Entangler trivial{RealMatrix::Identity(2, 2), 0};
  CHECK(discriminate_representations(identity, trivial).verdict ==
        TwinVerdict::indistinguishable);

  RealMatrix g(2, 2);
  g << 2.0, 0.0, 0.0, 0.5;
  TwinReport skew = discriminate_representations(LinearGenerator{g},
                                                 Entangler{rotation2(M_PI / 3.0), 0});
  CHECK(skew.verdict == TwinVerdict::z);
  CHECK(skew.decoder_gap <= 1e-12);
  CHECK(skew.trip_zprime.complexity > skew.trip_z.complexity);
}

TEST_CASE("discrimination gap grows with the rotation angle") {
  LinearGenerator identity{RealMatrix::Identity(2, 2)};
  double previous = 0.0;
  for (double theta : {0.2, 0.5, 0.9, 1.3, M_PI / 2.0}) {
    TwinReport report =
        discriminate_representations(identity, Entangler{rotation2(theta), 0});
    REQUIRE(report.complexity_gap ==
            Catch::Approx(2.0 * theta * std::sqrt(2.0)).epsilon(1e-12));
    REQUIRE(report.complexity_gap > previous);
    previous = report.complexity_gap;
  }
}
