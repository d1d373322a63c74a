#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qgauge/core.hpp"

// Desk-scale analogue of the representation fibre bundle: a factorized
// standard-Gaussian latent, distribution-preserving entanglers realized as
// orthogonal maps, linear generators, and a closed-form path complexity that
// discriminates the entangled from the disentangled representation even
// though their decoder-only views generate identical distributions.

namespace qgauge {

struct hypothesis_violation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct branch_ambiguity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Entangler {
  RealMatrix q;  // orthogonal
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return q.rows(); }

  void validate() const {
    if (q.rows() != q.cols() || q.rows() < 2)
      throw hypothesis_violation_error("Entangler: requires a square matrix with d > 1");
    RealMatrix defect = q.transpose() * q - RealMatrix::Identity(q.rows(), q.cols());
    if (defect.cwiseAbs().maxCoeff() > 1e-12)
      throw invalid_input_error("Entangler: Q not orthogonal within 1e-12");
  }
};

struct LinearGenerator {
  RealMatrix g;

  void validate() const {
    if (g.rows() != g.cols() || g.rows() < 1)
      throw invalid_input_error("LinearGenerator: must be square");
    Eigen::JacobiSVD<RealMatrix> svd(g);
    if (svd.singularValues().minCoeff() < 1e-10)
      throw invalid_input_error("LinearGenerator: smallest singular value below 1e-10");
  }
};

struct RoundTrip {
  RealMatrix encoder;
  RealMatrix decoder;
  double complexity = 0.0;
};

// Q = exp(A) for a seeded antisymmetric A rescaled so its largest rotation
// angle equals angle_scale. Orthogonal maps fix the isotropic Gaussian
// exactly, so every member of the family preserves p(z).
inline Entangler make_entangler(Eigen::Index d, std::uint64_t seed, double angle_scale) {
  if (d <= 1) throw hypothesis_violation_error("make_entangler: requires d > 1");
  if (!(angle_scale >= 0.0) || angle_scale > M_PI)
    throw invalid_input_error("make_entangler: angle_scale must lie in [0, pi]");

  auto rng = seeded_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealMatrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = gauss(rng);
  a = 0.5 * (a - a.transpose()).eval();

  // eigenvalues of an antisymmetric matrix are +-i theta_j
  Eigen::VectorXcd ev = a.cast<Complex>().eigenvalues();
  double max_angle = ev.imag().cwiseAbs().maxCoeff();
  if (max_angle > 0.0 && angle_scale > 0.0)
    a *= angle_scale / max_angle;
  else
    a.setZero();

  Entangler e{a.exp(), seed};
  e.validate();
  return e;
}

struct DistributionInvarianceReport {
  double analytic_gap = 0.0;   // max-norm of Q Q^T - I, exact for Gaussians
  double empirical_gap = 0.0;  // sample mean/covariance difference
};

inline DistributionInvarianceReport check_distribution_invariance(const Entangler& e,
                                                                  int n_samples,
                                                                  std::uint64_t seed) {
  e.validate();
  if (n_samples < 1000)
    throw invalid_input_error("check_distribution_invariance: n_samples must be >= 1000");
  const Eigen::Index d = e.dim();

  DistributionInvarianceReport report;
  report.analytic_gap =
      (e.q * e.q.transpose() - RealMatrix::Identity(d, d)).cwiseAbs().maxCoeff();

  auto rng = seeded_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RealMatrix z(d, n_samples);
  for (int s = 0; s < n_samples; ++s)
    for (Eigen::Index i = 0; i < d; ++i) z(i, s) = gauss(rng);
  RealMatrix zp = e.q * z;

  auto mean_of = [&](const RealMatrix& m) { return Eigen::VectorXd(m.rowwise().mean()); };
  auto cov_of = [&](const RealMatrix& m, const Eigen::VectorXd& mu) {
    RealMatrix centered = m.colwise() - mu;
    return RealMatrix(centered * centered.transpose() / static_cast<double>(n_samples - 1));
  };
  Eigen::VectorXd mu_z = mean_of(z), mu_zp = mean_of(zp);
  RealMatrix cov_z = cov_of(z, mu_z), cov_zp = cov_of(zp, mu_zp);
  report.empirical_gap = std::max((mu_z - mu_zp).cwiseAbs().maxCoeff(),
                                  (cov_z - cov_zp).cwiseAbs().maxCoeff());
  return report;
}

// Path complexity of an invertible linear map: polar-decompose M = Q S and
// take sqrt(||log Q||_F^2 + ||log S||_F^2). Zero at the identity, invariant
// under inversion, monotone in the rotation angle.
inline double map_complexity(const RealMatrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1 || !m.allFinite())
    throw invalid_input_error("map_complexity: square finite matrix required");
  Eigen::JacobiSVD<RealMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() < 1e-10)
    throw invalid_input_error("map_complexity: matrix is numerically singular");

  double log_s_sq = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double ls = std::log(svd.singularValues()(i));
    log_s_sq += ls * ls;
  }

  RealMatrix q = svd.matrixU() * svd.matrixV().transpose();
  Eigen::VectorXcd ev = q.cast<Complex>().eigenvalues();
  double log_q_sq = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i) + Complex(1.0, 0.0)) < 1e-9)
      throw branch_ambiguity_error(
          "map_complexity: rotation angle pi, principal logarithm branch is ambiguous");
    double theta = std::arg(ev(i));
    log_q_sq += theta * theta;
  }
  return std::sqrt(log_q_sq + log_s_sq);
}

// Round trip for the representation z (ent absent: encoder G^{-1}, decoder
// G) or z' = Qz (encoder Q G^{-1}, decoder G Q^T).
inline RoundTrip round_trip_complexity(const LinearGenerator& gen, const Entangler* ent = nullptr) {
  gen.validate();
  RealMatrix g_inv = gen.g.inverse();
  RoundTrip rt;
  if (ent == nullptr) {
    rt.encoder = g_inv;
    rt.decoder = gen.g;
  } else {
    ent->validate();
    if (ent->dim() != gen.g.rows())
      throw invalid_input_error("round_trip_complexity: dimension mismatch");
    rt.encoder = ent->q * g_inv;
    rt.decoder = gen.g * ent->q.transpose();
  }
  rt.complexity = map_complexity(rt.encoder) + map_complexity(rt.decoder);
  return rt;
}

enum class TwinVerdict { z, zprime, indistinguishable };

inline const char* to_string(TwinVerdict v) {
  switch (v) {
    case TwinVerdict::z: return "z";
    case TwinVerdict::zprime: return "zprime";
    default: return "indistinguishable";
  }
}

struct TwinReport {
  RoundTrip trip_z;
  RoundTrip trip_zprime;
  double complexity_gap = 0.0;  // zprime minus z
  double decoder_gap = 0.0;     // pushforward covariance difference of the decoders
  TwinVerdict verdict = TwinVerdict::indistinguishable;
};

// Claims (1)-(3) in one report: identical decoder-only pushforwards, a
// strictly positive round-trip complexity gap for a nontrivial entangler,
// and the verdict for the smaller-complexity representation.
inline TwinReport discriminate_representations(const LinearGenerator& gen, const Entangler& ent) {
  TwinReport report;
  report.trip_z = round_trip_complexity(gen);
  report.trip_zprime = round_trip_complexity(gen, &ent);
  report.complexity_gap = report.trip_zprime.complexity - report.trip_z.complexity;

  RealMatrix push_z = report.trip_z.decoder * report.trip_z.decoder.transpose();
  RealMatrix push_zp = report.trip_zprime.decoder * report.trip_zprime.decoder.transpose();
  report.decoder_gap = (push_z - push_zp).cwiseAbs().maxCoeff();

  if (std::abs(report.complexity_gap) < 1e-12)
    report.verdict = TwinVerdict::indistinguishable;
  else
    report.verdict = report.complexity_gap > 0.0 ? TwinVerdict::z : TwinVerdict::zprime;
  return report;
}

}  // namespace qgauge
