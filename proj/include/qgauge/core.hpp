#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Dense complex linear algebra kernels shared by every module: Hermitian
// eigendecomposition, skew-Hermitian exponentials, the real Hilbert-Schmidt
// pairing, seeded random instances and spectra with degeneracy grouping.

namespace qgauge {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;

struct invalid_input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct invalid_density_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct numerical_consistency_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Matrix& m) {
  return m.allFinite();
}

inline void require_square_finite(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw invalid_input_error(std::string(what) + ": matrix must be square and non-empty");
  if (!all_finite(m))
    throw invalid_input_error(std::string(what) + ": matrix has non-finite entries");
}

inline double max_abs(const Matrix& m) {
  return m.cwiseAbs().maxCoeff();
}

// Re Tr(A^dagger B): the ambient real inner product used for every
// orthogonality statement in the library.
inline double hs_inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw invalid_input_error("hs_inner: shape mismatch");
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

inline double hs_norm(const Matrix& a) {
  return std::sqrt(std::max(0.0, hs_inner(a, a)));
}

class HermitianOperator {
 public:
  explicit HermitianOperator(Matrix m) {
    require_square_finite(m, "HermitianOperator");
    Matrix sym = 0.5 * (m + m.adjoint());
    if (max_abs(m - sym) > 1e-12)
      throw invalid_input_error("HermitianOperator: input not Hermitian within 1e-12");
    m_ = std::move(sym);
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

class UnitaryOperator {
 public:
  explicit UnitaryOperator(Matrix m) : m_(std::move(m)) {
    require_square_finite(m_, "UnitaryOperator");
    Matrix defect = m_.adjoint() * m_ - Matrix::Identity(m_.rows(), m_.cols());
    if (max_abs(defect) > 1e-10)
      throw invalid_input_error("UnitaryOperator: U^dagger U deviates from identity beyond 1e-10");
  }

  static UnitaryOperator identity(Eigen::Index dim) {
    return UnitaryOperator(Matrix::Identity(dim, dim));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

struct EighResult {
  Eigen::VectorXd eigenvalues;  // non-increasing
  Matrix eigenvectors;          // columns, unitary
};

// Deterministic phase convention: rotate each eigenvector so its
// largest-magnitude component is real positive. Makes purifications and the
// anchor unitary U0 reproducible across runs.
inline void fix_column_phases(Matrix& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double a = std::abs(v(i, j));
      if (a > best + 1e-15) {
        best = a;
        imax = i;
      }
    }
    Complex pivot = v(imax, j);
    if (std::abs(pivot) > 0) v.col(j) *= std::conj(pivot) / std::abs(pivot);
  }
}

inline EighResult eigh(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix());
  if (solver.info() != Eigen::Success)
    throw numerical_consistency_error("eigh: eigensolver failed");
  const Eigen::Index n = h.dim();
  EighResult out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  // Eigen returns ascending order; flip to non-increasing.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
    out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  fix_column_phases(out.eigenvectors);
  return out;
}

// exp(-i t h) through the spectral decomposition; exact up to eigensolver
// accuracy, so spectra are conserved to machine precision along evolutions.
inline UnitaryOperator expm_skew(const HermitianOperator& h, double t) {
  if (!std::isfinite(t)) throw invalid_input_error("expm_skew: non-finite time");
  EighResult e = eigh(h);
  const Eigen::Index n = h.dim();
  Vector phases(n);
  for (Eigen::Index i = 0; i < n; ++i)
    phases(i) = std::exp(Complex(0.0, -t * e.eigenvalues(i)));
  Matrix u = e.eigenvectors * phases.asDiagonal() * e.eigenvectors.adjoint();
  return UnitaryOperator(std::move(u));
}

inline std::mt19937_64 seeded_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline HermitianOperator random_hermitian(Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) throw invalid_input_error("random_hermitian: dim must be >= 1");
  auto rng = seeded_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
  return HermitianOperator(0.5 * (m + Matrix(m.adjoint())));
}

// Haar-distributed unitary via QR of a Ginibre matrix with the standard
// phase correction on R's diagonal.
inline UnitaryOperator random_unitary(Eigen::Index dim, std::uint64_t seed) {
  if (dim < 1) throw invalid_input_error("random_unitary: dim must be >= 1");
  auto rng = seeded_engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    Complex d = r(j, j);
    q.col(j) *= (std::abs(d) > 0) ? d / std::abs(d) : Complex(1.0, 0.0);
  }
  return UnitaryOperator(std::move(q));
}

constexpr double kDefaultGroupingTol = 1e-8;

// Non-increasing eigenvalues with degeneracy grouping: values within
// grouping_tol of each other (by transitive closure along the sorted list)
// share one multiplicity group.
struct Spectrum {
  std::vector<double> values;        // non-increasing
  std::vector<int> multiplicities;   // sums to values.size()
  double grouping_tol = kDefaultGroupingTol;

  int rank_groups() const { return static_cast<int>(multiplicities.size()); }
  int size() const { return static_cast<int>(values.size()); }
};

inline Spectrum group_spectrum(const Eigen::VectorXd& sorted_desc, double grouping_tol) {
  Spectrum s;
  s.grouping_tol = grouping_tol;
  s.values.assign(sorted_desc.data(), sorted_desc.data() + sorted_desc.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (i > 0 && std::abs(s.values[i - 1] - s.values[i]) <= grouping_tol)
      ++s.multiplicities.back();
    else
      s.multiplicities.push_back(1);
  }
  return s;
}

class DensityOperator {
 public:
  explicit DensityOperator(Matrix m, double grouping_tol = kDefaultGroupingTol) {
    require_square_finite(m, "DensityOperator");
    if (max_abs(m - Matrix(m.adjoint())) > 1e-12)
      throw invalid_density_error("DensityOperator: not Hermitian within 1e-12");
    m_ = 0.5 * (m + m.adjoint());
    double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > 1e-12)
      throw invalid_density_error("DensityOperator: trace deviates from 1 by " +
                                  std::to_string(tr - 1.0));
    EighResult e = eigh(HermitianOperator(m_));
    if (e.eigenvalues.minCoeff() < -1e-12)
      throw invalid_density_error("DensityOperator: negative eigenvalue " +
                                  std::to_string(e.eigenvalues.minCoeff()));
    spectrum_ = group_spectrum(e.eigenvalues, grouping_tol);
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const Spectrum& spectrum() const { return spectrum_; }

 private:
  Matrix m_;
  Spectrum spectrum_;
};

inline Spectrum spectrum_of(const DensityOperator& rho, double grouping_tol = kDefaultGroupingTol) {
  EighResult e = eigh(HermitianOperator(rho.matrix()));
  if (e.eigenvalues.minCoeff() < -1e-12)
    throw invalid_density_error("spectrum_of: negative eigenvalue beyond tolerance");
  return group_spectrum(e.eigenvalues, grouping_tol);
}

// Random density operator with a non-degenerate spectrum a.s.: squared
// Gaussians normalized to unit sum, conjugated by a Haar unitary.
inline DensityOperator random_density(Eigen::Index dim, std::uint64_t seed) {
  auto rng = seeded_engine(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd p(dim);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    double g = gauss(rng);
    p(i) = g * g + 1e-3;
    sum += p(i);
  }
  p /= sum;
  UnitaryOperator w = random_unitary(dim, seed ^ 0xda442d24ULL);
  Matrix rho = w.matrix() * p.asDiagonal() * w.matrix().adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return DensityOperator(std::move(rho));
}

}  // namespace qgauge
