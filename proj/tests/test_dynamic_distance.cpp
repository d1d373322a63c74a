#include <catch2/catch_amalgamated.hpp>

#include "qgauge/dynamic_distance.hpp"
#include "test_helpers.hpp"

using namespace qgauge;
using namespace qgauge::testing;

namespace {

OptimizerConfig quick_config(std::uint64_t seed = 0) {
  OptimizerConfig config;
  config.restarts = 4;
  config.seed = seed;
  config.max_iterations = 200;
  return config;
}

// Independent oracle for the pure-state dynamic distance: grid over
// single-segment qubit generators x sx + y sy + z sz, keep those whose
// exponential transports |0> onto the target ray, minimize the (constant)
// uncertainty. Expected minimum: the Fubini-Study angle arccos(c).
double dense_sampled_pure_distance(double c) {
  Eigen::Vector2cd psi0(1.0, 0.0);
  Eigen::Vector2cd psi1(c, std::sqrt(1.0 - c * c));
  Matrix rho0 = psi0 * psi0.adjoint();
  double best = 1e9;
  const int n = 41;
  double cx = 0.0, cy = 0.0, cz = 0.0, half = 2.0;
  for (int level = 0; level < 4; ++level) {
    double bx = cx, by = cy, bz = cz;
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        for (int iz = 0; iz < n; ++iz) {
          double x = cx - half + 2.0 * half * ix / (n - 1);
          double y = cy - half + 2.0 * half * iy / (n - 1);
          double z = cz - half + 2.0 * half * iz / (n - 1);
          Matrix h = x * pauli_x() + y * pauli_y() + z * pauli_z();
          Matrix u = expm_skew(HermitianOperator(h), 1.0).matrix();
          if (std::abs((psi1.adjoint() * u * psi0).value()) < 1.0 - 2e-4) continue;
          double h2 = (h * h * rho0).trace().real();
          double h1 = (h * rho0).trace().real();
          double value = std::sqrt(std::max(h2 - h1 * h1, 0.0));
          if (value < best) {
            best = value;
            bx = x;
            by = y;
            bz = z;
          }
        }
      }
    }
    // refine around the best feasible sample
    cx = bx;
    cy = by;
    cz = bz;
    half *= 0.12;
  }
  return best;
}

}  // namespace

TEST_CASE("dense single-segment sampling confirms the arccos(c) oracle") {
  CHECK(dense_sampled_pure_distance(0.0) == Catch::Approx(std::acos(0.0)).margin(6e-2));
  CHECK(dense_sampled_pure_distance(0.5) == Catch::Approx(std::acos(0.5)).margin(6e-2));
}

TEST_CASE("endpoint_defect examples") {
  DensityOperator rho0 = diag_density({0.75, 0.25});
  DensityOperator rho1 = diag_density({0.25, 0.75});
  DistanceProblem problem{rho0, rho1, 1.0, 1};

  auto exact = single_segment((M_PI / 2.0) * pauli_x(), 1.0);
  CHECK(endpoint_defect(problem, exact) <= 1e-10);

  auto idle = single_segment(Matrix::Zero(2, 2), 1.0);
  DistanceProblem same{rho0, rho0, 1.0, 1};
  CHECK(endpoint_defect(same, idle) == Catch::Approx(0.0).margin(1e-15));
  CHECK(endpoint_defect(problem, idle) ==
        Catch::Approx(hs_norm(rho0.matrix() - rho1.matrix())));
}

TEST_CASE("identical endpoints yield a near-zero distance from the zero path") {
  DensityOperator rho = random_density(2, 17);
  DistanceResult result = dynamic_distance({rho, rho, 1.0, 4}, quick_config());
  CHECK(result.converged);
  CHECK(result.distance <= 1e-6);
  CHECK(result.restart_index == 0);
}

TEST_CASE("orthogonal pure qubit states reach the pi/2 geodesic bound") {
  DistanceProblem problem{diag_density({1.0, 0.0}), diag_density({0.0, 1.0}), 1.0, 8};
  DistanceResult result = dynamic_distance(problem, quick_config(1));
  REQUIRE(result.converged);
  CHECK(result.distance >= M_PI / 2.0 - 1e-3);
  CHECK(result.distance <= M_PI / 2.0 + 2e-2);
}

TEST_CASE("mixed qubit pair is bounded by the explicit sigma_x path") {
  DistanceProblem problem{diag_density({0.75, 0.25}), diag_density({0.25, 0.75}), 1.0, 8};
  DistanceResult result = dynamic_distance(problem, quick_config(2));
  REQUIRE(result.converged);
  CHECK(result.distance <= M_PI / 2.0 + 1e-3);
}

TEST_CASE("upper-bound soundness of the reported result") {
  DistanceProblem problem{diag_density({1.0, 0.0}), plus_state(), 1.0, 6};
  OptimizerConfig config = quick_config(3);
  DistanceResult result = dynamic_distance(problem, config);
  REQUIRE(result.converged);
  CHECK(result.endpoint_defect <= config.endpoint_tol);
  CHECK(result.distance ==
        Catch::Approx(h_distance(problem.rho0, result.best_path, 32)).margin(1e-12));
  CHECK(endpoint_defect(problem, result.best_path) ==
        Catch::Approx(result.endpoint_defect).margin(1e-12));
}

TEST_CASE("adding restarts never increases the reported distance") {
  DistanceProblem problem{diag_density({1.0, 0.0}), diag_density({0.0, 1.0}), 1.0, 6};
  OptimizerConfig few = quick_config(4);
  few.restarts = 2;
  OptimizerConfig many = quick_config(4);
  many.restarts = 5;
  DistanceResult a = dynamic_distance(problem, few);
  DistanceResult b = dynamic_distance(problem, many);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(b.distance <= a.distance + 1e-12);
}

TEST_CASE("distance is reparametrization invariant in the duration") {
  DistanceProblem short_run{diag_density({1.0, 0.0}), diag_density({0.0, 1.0}), 1.0, 6};
  DistanceProblem long_run{short_run.rho0, short_run.rho1, 2.0, 6};
  DistanceResult a = dynamic_distance(short_run, quick_config(5));
  DistanceResult b = dynamic_distance(long_run, quick_config(5));
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(std::abs(a.distance - b.distance) <= 4e-2);
}

TEST_CASE("non-isospectral endpoints are rejected") {
  DistanceProblem problem{diag_density({0.75, 0.25}), diag_density({0.6, 0.4}), 1.0, 4};
  CHECK_THROWS_AS(problem.validate(), invalid_input_error);
}

TEST_CASE("starved optimizer reports converged = false instead of throwing") {
  DistanceProblem problem{diag_density({1.0, 0.0}), diag_density({0.0, 1.0}), 1.0, 4};
  OptimizerConfig config;
  config.restarts = 1;  // zero path only; cannot move the state
  config.max_iterations = 2;
  config.penalty_schedule = {1.0};
  DistanceResult result = dynamic_distance(problem, config);
  CHECK_FALSE(result.converged);
  CHECK(result.endpoint_defect > config.endpoint_tol);
}

TEST_CASE("determinism: identical configs give identical results") {
  DistanceProblem problem{diag_density({1.0, 0.0}), plus_state(), 1.0, 6};
  DistanceResult a = dynamic_distance(problem, quick_config(9));
  DistanceResult b = dynamic_distance(problem, quick_config(9));
  CHECK(a.distance == b.distance);
  CHECK(a.endpoint_defect == b.endpoint_defect);
  CHECK(a.restart_index == b.restart_index);
}

TEST_CASE("check_unitary_invariance with the identity is exact to roundoff") {
  DistanceProblem problem{diag_density({1.0, 0.0}), diag_density({0.0, 1.0}), 1.0, 6};
  InvarianceReport report =
      check_unitary_invariance(problem, UnitaryOperator::identity(2), quick_config(6));
  // the conjugated run re-expands its initial coefficients, so the two
  // searches agree only up to that reconstruction roundoff
  CHECK(report.gap <= 1e-10);
}

TEST_CASE("check_unitary_invariance under a random conjugation") {
  DistanceProblem problem{diag_density({1.0, 0.0}), diag_density({0.0, 1.0}), 1.0, 6};
  UnitaryOperator u = random_unitary(2, 11);
  InvarianceReport report = check_unitary_invariance(problem, u, quick_config(7));
  REQUIRE(report.result.converged);
  REQUIRE(report.result_conjugated.converged);
  CHECK(report.gap <= 4e-2);

  // conjugating the found path directly leaves D_H invariant to 1e-10
  StateTrajectory traj = evolve_von_neumann(problem.rho0, report.result.best_path, 8);
  StateTrajectory conj = conjugate_trajectory(traj, u);
  CHECK(std::abs(h_distance(traj.states.front(), traj.path, 32) -
                 h_distance(conj.states.front(), conj.path, 32)) <= 1e-10);
}
