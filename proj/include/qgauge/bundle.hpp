#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qgauge/core.hpp"
#include "qgauge/evolution.hpp"

// The purification bundle S(sigma) -> D(sigma): points are dim x k matrices
// Psi with Psi Psi^dagger = rho and Psi^dagger Psi = P(sigma) = Diag(sigma).
// Vertical vectors span Ker d(pi), horizontal vectors are their
// Hilbert-Schmidt orthogonal complement; the splitting is the connection.

namespace qgauge {

struct invalid_purification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct invalid_gauge_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct lift_diverged_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kRankTruncationTol = 1e-14;

struct Purification {
  Matrix psi;      // dim x k
  Spectrum sigma;  // retained (numerical-rank) eigenvalues, grouped

  Eigen::Index dim() const { return psi.rows(); }
  Eigen::Index k() const { return psi.cols(); }

  Matrix p_sigma() const {
    Eigen::VectorXd p(k());
    for (Eigen::Index j = 0; j < k(); ++j) p(j) = sigma.values[j];
    return Matrix(p.asDiagonal());
  }

  void validate() const {
    if (psi.rows() < 1 || psi.cols() < 1 || !all_finite(psi))
      throw invalid_purification_error("Purification: empty or non-finite");
    if (static_cast<Eigen::Index>(sigma.values.size()) != psi.cols())
      throw invalid_purification_error("Purification: sigma length != column count");
    if (max_abs(psi.adjoint() * psi - p_sigma()) > 1e-10)
      throw invalid_purification_error("Purification: Psi^dagger Psi != P(sigma) within 1e-10");
  }
};

struct BundleTangent {
  Purification at;
  Matrix direction;  // dim x k

  void validate() const {
    at.validate();
    if (direction.rows() != at.dim() || direction.cols() != at.k())
      throw invalid_input_error("BundleTangent: shape mismatch with base point");
    Matrix d = direction.adjoint() * at.psi + at.psi.adjoint() * direction;
    if (max_abs(d) > 1e-9)
      throw invalid_input_error("BundleTangent: not tangent to S(sigma) within 1e-9");
  }
};

enum class GaugeSide { right, left };

struct GaugeElement {
  GaugeSide side;
  UnitaryOperator matrix;  // k x k for right, dim x dim for left
};

// Psi0 = U0 sqrt(P(sigma)) on the retained rank slots, with the
// deterministic eigenvector phase convention of eigh.
inline Purification standard_purification(const DensityOperator& rho,
                                          double grouping_tol = kDefaultGroupingTol) {
  EighResult e = eigh(HermitianOperator(rho.matrix()));
  Eigen::Index k = 0;
  while (k < e.eigenvalues.size() && e.eigenvalues(k) >= kRankTruncationTol) ++k;
  if (k == 0) throw invalid_density_error("standard_purification: zero numerical rank");

  Purification out;
  out.psi.resize(rho.dim(), k);
  Eigen::VectorXd kept = e.eigenvalues.head(k);
  for (Eigen::Index j = 0; j < k; ++j)
    out.psi.col(j) = e.eigenvectors.col(j) * std::sqrt(kept(j));
  out.sigma = group_spectrum(kept, grouping_tol);
  out.validate();
  return out;
}

inline DensityOperator project_pi(const Purification& psi) {
  psi.validate();
  Matrix rho = psi.psi * psi.psi.adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  double drift = std::abs(rho.trace().real() - 1.0);
  if (drift > 1e-8)
    throw invalid_purification_error("project_pi: trace drift " + std::to_string(drift));
  rho /= rho.trace().real();
  DensityOperator out(std::move(rho), psi.sigma.grouping_tol);
  Spectrum s = out.spectrum();
  for (std::size_t i = 0; i < psi.sigma.values.size(); ++i)
    if (std::abs(s.values[i] - psi.sigma.values[i]) > 1e-9)
      throw invalid_purification_error("project_pi: spectrum drift beyond 1e-9");
  return out;
}

namespace detail {

// Offsets of the multiplicity blocks inside the k retained slots.
inline std::vector<std::pair<int, int>> block_layout(const Spectrum& sigma) {
  std::vector<std::pair<int, int>> blocks;
  int off = 0;
  for (int m : sigma.multiplicities) {
    blocks.emplace_back(off, m);
    off += m;
  }
  return blocks;
}

// Raw (unnormalized) basis of the anti-Hermitian commutant of P(sigma):
// block anti-Hermitian per multiplicity group, sum of m_i^2 elements.
inline std::vector<Matrix> antihermitian_commutant_basis(const Spectrum& sigma) {
  const int k = sigma.size();
  std::vector<Matrix> basis;
  for (auto [off, m] : block_layout(sigma)) {
    for (int j = 0; j < m; ++j) {
      Matrix a = Matrix::Zero(k, k);
      a(off + j, off + j) = Complex(0.0, 1.0);
      basis.push_back(a);
    }
    for (int j = 0; j < m; ++j) {
      for (int l = j + 1; l < m; ++l) {
        Matrix a = Matrix::Zero(k, k);
        a(off + j, off + l) = 1.0;
        a(off + l, off + j) = -1.0;
        basis.push_back(a);
        Matrix b = Matrix::Zero(k, k);
        b(off + j, off + l) = Complex(0.0, 1.0);
        b(off + l, off + j) = Complex(0.0, 1.0);
        basis.push_back(b);
      }
    }
  }
  return basis;
}

// Orthonormalize the commutant generators under <A,B> = Re Tr(A^dagger P B),
// so that {Psi A_i} is hs_inner-orthonormal at every point of S(sigma).
inline std::vector<Matrix> orthonormal_vertical_generators(const Spectrum& sigma) {
  auto raw = antihermitian_commutant_basis(sigma);
  Matrix p(sigma.size(), sigma.size());
  p.setZero();
  for (int i = 0; i < sigma.size(); ++i) p(i, i) = sigma.values[i];

  std::vector<Matrix> ortho;
  for (Matrix a : raw) {
    for (const Matrix& b : ortho) {
      double c = (a.adjoint() * p * b).trace().real();
      a -= c * b;
    }
    double n2 = (a.adjoint() * p * a).trace().real();
    if (n2 > 1e-24) ortho.push_back(a / std::sqrt(n2));
  }
  return ortho;
}

}  // namespace detail

inline std::vector<BundleTangent> vertical_basis(const Purification& psi) {
  psi.validate();
  std::vector<BundleTangent> basis;
  for (const Matrix& a : detail::orthonormal_vertical_generators(psi.sigma))
    basis.push_back({psi, psi.psi * a});
  return basis;
}

struct TangentSplit {
  BundleTangent horizontal;
  BundleTangent vertical;
};

inline TangentSplit horizontal_project(const BundleTangent& tangent) {
  tangent.validate();
  Matrix vertical = Matrix::Zero(tangent.at.dim(), tangent.at.k());
  for (const Matrix& a : detail::orthonormal_vertical_generators(tangent.at.sigma)) {
    Matrix v = tangent.at.psi * a;
    vertical += hs_inner(v, tangent.direction) * v;
  }
  return {{tangent.at, tangent.direction - vertical}, {tangent.at, vertical}};
}

inline Purification apply_gauge(const Purification& psi, const GaugeElement& g) {
  psi.validate();
  Purification out;
  out.sigma = psi.sigma;
  if (g.side == GaugeSide::right) {
    if (g.matrix.dim() != psi.k())
      throw invalid_gauge_error("apply_gauge: right gauge element must be k x k");
    if (max_abs(g.matrix.matrix() * psi.p_sigma() - psi.p_sigma() * g.matrix.matrix()) > 1e-10)
      throw invalid_gauge_error("apply_gauge: right element does not commute with P(sigma)");
    out.psi = psi.psi * g.matrix.matrix();
  } else {
    if (g.matrix.dim() != psi.dim())
      throw invalid_gauge_error("apply_gauge: left gauge element must be dim x dim");
    Matrix rho = psi.psi * psi.psi.adjoint();
    if (max_abs(g.matrix.matrix() * rho - rho * g.matrix.matrix()) > 1e-10)
      throw invalid_gauge_error("apply_gauge: left element does not commute with rho");
    out.psi = g.matrix.matrix() * psi.psi;
  }
  out.validate();
  return out;
}

struct GaugeGroupStructure {
  UnitaryOperator anchor_unitary;  // U0 with rho0 = U0 Diag(sigma) U0^dagger
  Spectrum sigma;
  std::vector<int> factor_dims;
  int algebra_dim = 0;

  // v = U0 (direct sum of Haar u_i in U(m_i)) U0^dagger; commutes with rho0.
  UnitaryOperator sample(std::uint64_t seed) const {
    const Eigen::Index d = anchor_unitary.dim();
    Matrix block = Matrix::Zero(d, d);
    int off = 0;
    std::uint64_t salt = 0;
    for (int m : factor_dims) {
      UnitaryOperator u = random_unitary(m, seed + 0x51ed270b * (++salt));
      block.block(off, off, m, m) = u.matrix();
      off += m;
    }
    for (Eigen::Index i = off; i < d; ++i) block(i, i) = 1.0;  // truncated-rank slots
    Matrix v = anchor_unitary.matrix() * block * anchor_unitary.matrix().adjoint();
    return UnitaryOperator(std::move(v));
  }
};

inline GaugeGroupStructure gauge_group_factors(const DensityOperator& rho0,
                                               double grouping_tol = kDefaultGroupingTol) {
  EighResult e = eigh(HermitianOperator(rho0.matrix()));
  Eigen::Index k = 0;
  while (k < e.eigenvalues.size() && e.eigenvalues(k) >= kRankTruncationTol) ++k;
  Spectrum sigma = group_spectrum(e.eigenvalues.head(k), grouping_tol);
  GaugeGroupStructure out{UnitaryOperator(e.eigenvectors), sigma, sigma.multiplicities, 0};
  for (int m : out.factor_dims) out.algebra_dim += m * m;
  return out;
}

namespace detail {

// Unitary polar factor V (V^dagger V)^{-1/2}; stays block diagonal for a
// block-diagonal V, so gauge corrections remain in the commutant group.
inline Matrix unitarize(const Matrix& v) {
  Matrix gram = v.adjoint() * v;
  gram = 0.5 * (gram + gram.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return v * (es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint());
}

}  // namespace detail

// Unique horizontal lift of the base trajectory starting from psi0,
// parametrized as Psi(t) = U(t) Psi0 V(t): U(t) is the exact base
// propagator, V(t) a unitary in the commutant of P(sigma). Both bundle
// constraints hold exactly by construction; RK4 integrates only the gauge
// correction V_dot = V B with Psi B the vertical part of i H Psi.
inline std::vector<Purification> horizontal_lift(const StateTrajectory& traj,
                                                 const Purification& psi0,
                                                 int steps_per_sample = 8) {
  psi0.validate();
  if (traj.states.empty()) throw invalid_input_error("horizontal_lift: empty trajectory");
  if (steps_per_sample < 1)
    throw invalid_input_error("horizontal_lift: steps_per_sample must be >= 1");
  {
    Matrix rho0 = psi0.psi * psi0.psi.adjoint();
    if (max_abs(rho0 - traj.states.front().matrix()) > 1e-8)
      throw invalid_input_error("horizontal_lift: psi0 does not project to the initial state");
  }

  auto generators = detail::orthonormal_vertical_generators(psi0.sigma);
  const Eigen::Index dim = psi0.dim();
  const Eigen::Index k = psi0.k();

  std::vector<Purification> lift;
  lift.push_back(psi0);
  Matrix u = Matrix::Identity(dim, dim);  // propagator up to the current sample
  Matrix v = Matrix::Identity(k, k);      // accumulated gauge correction

  for (std::size_t s = 0; s + 1 < traj.times.size(); ++s) {
    const double span = traj.times[s + 1] - traj.times[s];
    // samples align with segment boundaries, so one generator rules the interval
    const HermitianOperator& h =
        traj.path.generator_at(traj.times[s] + 0.5 * span / steps_per_sample);
    EighResult e = eigh(h);
    auto propagate = [&](double dt) {
      Vector phases(dim);
      for (Eigen::Index i = 0; i < dim; ++i)
        phases(i) = std::exp(Complex(0.0, -dt * e.eigenvalues(i)));
      return Matrix(e.eigenvectors * phases.asDiagonal() * e.eigenvectors.adjoint());
    };
    auto gauge_rate = [&](const Matrix& v_cur, double local_t) {
      Matrix psi = propagate(local_t) * u * psi0.psi * v_cur;
      Matrix velocity = Complex(0.0, -1.0) * (h.matrix() * psi);
      Matrix b = Matrix::Zero(k, k);
      for (const Matrix& a : generators) b -= hs_inner(psi * a, velocity) * a;
      return Matrix(v_cur * b);
    };

    const double dt = span / steps_per_sample;
    for (int step = 0; step < steps_per_sample; ++step) {
      double a0 = step * dt;
      Matrix k1 = gauge_rate(v, a0);
      Matrix k2 = gauge_rate(v + 0.5 * dt * k1, a0 + 0.5 * dt);
      Matrix k3 = gauge_rate(v + 0.5 * dt * k2, a0 + 0.5 * dt);
      Matrix k4 = gauge_rate(v + dt * k3, a0 + dt);
      v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      v = detail::unitarize(v);
    }
    u = propagate(span) * u;

    Purification point;
    point.psi = u * psi0.psi * v;
    point.sigma = psi0.sigma;
    double drift = max_abs(point.psi * point.psi.adjoint() - traj.states[s + 1].matrix());
    if (drift > 1e-4)
      throw lift_diverged_error("horizontal_lift: projection drift " + std::to_string(drift) +
                                " at t = " + std::to_string(traj.times[s + 1]));
    lift.push_back(std::move(point));
  }
  return lift;
}

// Speed of the base curve in the induced (pushed-forward horizontal) metric:
// norm of the horizontal part of -i H Psi at the standard purification.
inline double induced_speed(const DensityOperator& rho, const HermitianOperator& h,
                            double grouping_tol = kDefaultGroupingTol) {
  if (rho.dim() != h.dim()) throw invalid_input_error("induced_speed: dimension mismatch");
  Purification psi = standard_purification(rho, grouping_tol);
  BundleTangent tangent{psi, Complex(0.0, -1.0) * (h.matrix() * psi.psi)};
  return hs_norm(horizontal_project(tangent).horizontal.direction);
}

// Trapezoid length of the lift, using the horizontal speed at each sample.
inline double lift_length(const std::vector<Purification>& lift, const StateTrajectory& traj) {
  if (lift.size() != traj.times.size())
    throw invalid_input_error("lift_length: sample count mismatch");
  auto generators = detail::orthonormal_vertical_generators(lift.front().sigma);
  std::vector<double> speed(lift.size());
  for (std::size_t s = 0; s < lift.size(); ++s) {
    const Matrix& h = traj.path.generator_at(traj.times[s]).matrix();
    Matrix x = Complex(0.0, -1.0) * (h * lift[s].psi);
    for (const Matrix& a : generators) {
      Matrix v = lift[s].psi * a;
      double n2 = hs_inner(v, v);
      if (n2 > 1e-24) x -= (hs_inner(v, x) / n2) * v;
    }
    speed[s] = hs_norm(x);
  }
  double length = 0.0;
  for (std::size_t s = 0; s + 1 < lift.size(); ++s)
    length += 0.5 * (speed[s] + speed[s + 1]) * (traj.times[s + 1] - traj.times[s]);
  return length;
}

// Trapezoid length of the base curve in the induced metric, sampled on the
// trajectory grid.
inline double base_induced_length(const StateTrajectory& traj,
                                  double grouping_tol = kDefaultGroupingTol) {
  std::vector<double> speed(traj.times.size());
  for (std::size_t s = 0; s < traj.times.size(); ++s)
    speed[s] = induced_speed(traj.states[s], traj.path.generator_at(traj.times[s]), grouping_tol);
  double length = 0.0;
  for (std::size_t s = 0; s + 1 < traj.times.size(); ++s)
    length += 0.5 * (speed[s] + speed[s + 1]) * (traj.times[s + 1] - traj.times[s]);
  return length;
}

}  // namespace qgauge
