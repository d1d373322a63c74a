#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "qgauge/core.hpp"

// Exact integration of i rho_dot = [H, rho] over piecewise-constant
// Hamiltonian paths, and the energy-uncertainty length functional
// D_H = integral of sqrt(Tr(H^2 rho) - Tr(H rho)^2) dt.

namespace qgauge {

struct PathSegment {
  HermitianOperator generator;
  double duration;
};

struct HamiltonianPath {
  std::vector<PathSegment> segments;
  double t0 = 0.0;

  Eigen::Index dim() const {
    return segments.empty() ? 0 : segments.front().generator.dim();
  }
  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.duration;
    return t;
  }

  void validate() const {
    if (segments.empty()) throw invalid_input_error("HamiltonianPath: no segments");
    const Eigen::Index d = segments.front().generator.dim();
    double total = 0.0;
    for (const auto& s : segments) {
      if (s.generator.dim() != d)
        throw invalid_input_error("HamiltonianPath: mixed segment dimensions");
      if (!(s.duration > 0.0) || !std::isfinite(s.duration))
        throw invalid_input_error("HamiltonianPath: segment duration must be positive");
      total += s.duration;
    }
    if (!(total > 0.0)) throw invalid_input_error("HamiltonianPath: total duration must be positive");
  }

  // Generator in effect at absolute time t (right-continuous, last segment
  // extends to the endpoint).
  const HermitianOperator& generator_at(double t) const {
    double s = t0;
    for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
      s += segments[i].duration;
      if (t < s) return segments[i].generator;
    }
    return segments.back().generator;
  }
};

struct StateTrajectory {
  std::vector<double> times;
  std::vector<DensityOperator> states;
  HamiltonianPath path;

  const DensityOperator& initial() const { return states.front(); }
  const DensityOperator& final_state() const { return states.back(); }
};

inline StateTrajectory evolve_von_neumann(const DensityOperator& rho0,
                                          const HamiltonianPath& path,
                                          int samples_per_segment) {
  path.validate();
  if (rho0.dim() != path.dim())
    throw invalid_input_error("evolve_von_neumann: dimension mismatch between state and path");
  if (samples_per_segment < 2)
    throw invalid_input_error("evolve_von_neumann: samples_per_segment must be >= 2");

  StateTrajectory traj;
  traj.path = path;
  traj.times.push_back(path.t0);
  traj.states.push_back(rho0);

  Matrix rho = rho0.matrix();
  double t = path.t0;
  for (const auto& seg : path.segments) {
    EighResult e = eigh(seg.generator);
    const Eigen::Index n = rho.rows();
    for (int s = 1; s <= samples_per_segment; ++s) {
      double dt = seg.duration * s / samples_per_segment;
      Vector phases(n);
      for (Eigen::Index i = 0; i < n; ++i)
        phases(i) = std::exp(Complex(0.0, -dt * e.eigenvalues(i)));
      Matrix u = e.eigenvectors * phases.asDiagonal() * e.eigenvectors.adjoint();
      Matrix r = u * rho * u.adjoint();
      r = 0.5 * (r + r.adjoint());
      traj.times.push_back(t + dt);
      traj.states.emplace_back(std::move(r));
    }
    // advance rho to the segment end exactly once
    rho = traj.states.back().matrix();
    t += seg.duration;
  }
  return traj;
}

inline double energy_uncertainty(const HermitianOperator& h, const DensityOperator& rho) {
  if (h.dim() != rho.dim())
    throw invalid_input_error("energy_uncertainty: dimension mismatch");
  const Matrix& hm = h.matrix();
  double h2 = (hm * hm * rho.matrix()).trace().real();
  double h1 = (hm * rho.matrix()).trace().real();
  double var = h2 - h1 * h1;
  if (var < -1e-12)
    throw numerical_consistency_error("energy_uncertainty: variance " + std::to_string(var) +
                                      " below clamp tolerance");
  return std::sqrt(std::max(var, 0.0));
}

namespace detail {

// Composite Simpson over one segment. The exact trajectory makes the
// integrand constant in t for a constant generator, so this converges
// immediately; the quadrature is kept general anyway.
inline double simpson_segment(const HermitianOperator& h, const Matrix& rho_start,
                              double duration, int points) {
  int intervals = points;
  if (intervals % 2 != 0) ++intervals;
  EighResult e = eigh(h);
  const Eigen::Index n = rho_start.rows();
  auto value_at = [&](double dt) {
    Vector phases(n);
    for (Eigen::Index i = 0; i < n; ++i)
      phases(i) = std::exp(Complex(0.0, -dt * e.eigenvalues(i)));
    Matrix u = e.eigenvectors * phases.asDiagonal() * e.eigenvectors.adjoint();
    Matrix r = u * rho_start * u.adjoint();
    r = 0.5 * (r + r.adjoint());
    double h2 = (h.matrix() * h.matrix() * r).trace().real();
    double h1 = (h.matrix() * r).trace().real();
    return std::sqrt(std::max(h2 - h1 * h1, 0.0));
  };
  double step = duration / intervals;
  double acc = value_at(0.0) + value_at(duration);
  for (int i = 1; i < intervals; ++i) acc += value_at(i * step) * (i % 2 ? 4.0 : 2.0);
  return acc * step / 3.0;
}

}  // namespace detail

inline double h_distance(const DensityOperator& rho0, const HamiltonianPath& path,
                         int quadrature_points = 32) {
  path.validate();
  if (rho0.dim() != path.dim())
    throw invalid_input_error("h_distance: dimension mismatch");
  if (quadrature_points < 8)
    throw invalid_input_error("h_distance: quadrature_points must be >= 8 per segment");

  double total = 0.0;
  Matrix rho = rho0.matrix();
  for (const auto& seg : path.segments) {
    total += detail::simpson_segment(seg.generator, rho, seg.duration, quadrature_points);
    Matrix u = expm_skew(seg.generator, seg.duration).matrix();
    rho = u * rho * u.adjoint();
    rho = 0.5 * (rho + rho.adjoint());
  }
  return total;
}

// Simultaneous conjugation of states and generators by a fixed unitary;
// leaves every trace functional, hence D_H, unchanged.
inline StateTrajectory conjugate_trajectory(const StateTrajectory& traj, const UnitaryOperator& u) {
  if (traj.states.empty()) throw invalid_input_error("conjugate_trajectory: empty trajectory");
  if (u.dim() != traj.states.front().dim())
    throw invalid_input_error("conjugate_trajectory: dimension mismatch");

  StateTrajectory out;
  out.times = traj.times;
  out.path.t0 = traj.path.t0;
  for (const auto& seg : traj.path.segments) {
    Matrix g = u.matrix() * seg.generator.matrix() * u.matrix().adjoint();
    out.path.segments.push_back({HermitianOperator(0.5 * (g + g.adjoint())), seg.duration});
  }
  for (const auto& st : traj.states) {
    Matrix r = u.matrix() * st.matrix() * u.matrix().adjoint();
    r = 0.5 * (r + r.adjoint());
    r /= r.trace().real();
    out.states.emplace_back(std::move(r));
  }
  return out;
}

inline HamiltonianPath conjugate_path(const HamiltonianPath& path, const UnitaryOperator& u) {
  HamiltonianPath out;
  out.t0 = path.t0;
  for (const auto& seg : path.segments) {
    Matrix g = u.matrix() * seg.generator.matrix() * u.matrix().adjoint();
    out.segments.push_back({HermitianOperator(0.5 * (g + g.adjoint())), seg.duration});
  }
  return out;
}

inline HamiltonianPath reversed_negated(const HamiltonianPath& path) {
  HamiltonianPath out;
  out.t0 = path.t0;
  for (auto it = path.segments.rbegin(); it != path.segments.rend(); ++it)
    out.segments.push_back({HermitianOperator(-it->generator.matrix()), it->duration});
  return out;
}

}  // namespace qgauge
