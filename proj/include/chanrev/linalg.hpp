#pragma once

// Dense Hermitian linear algebra: spectral decompositions with eigenvalue
// grouping, support projections, functional calculus, tensor powers and the
// 2x2 block-matrix positivity test.

#include "chanrev/core.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>
#include <type_traits>

namespace chanrev {

inline Matrix identity(Eigen::Index d) { return Matrix::Identity(d, d); }

/// Largest entrywise deviation from Hermiticity, max |M[i,j] - conj(M[j,i])|.
inline double hermitian_residual(const Matrix& m) {
  if (m.rows() != m.cols()) return kInfinity;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Hermiticity test. The tolerance scales with max(1, max|M[i,j]|) so that
/// operators with large entries (inverse metrics, likelihood ratios) are not
/// rejected for roundoff.
inline bool is_hermitian(const Matrix& m, double atol = defaults::atol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return hermitian_residual(m) <= atol * scale;
}

inline Matrix hermitian_part(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline Complex hs_inner(const Matrix& a, const Matrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// Column-stacking vectorization.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  require(v.size() == rows * cols, ErrorKind::DimensionMismatch, "unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// Raw eigenpairs of a Hermitian matrix, eigenvalues ascending.
struct EigenPairs {
  RealVector values;
  Matrix vectors;
};

inline EigenPairs eigh(const Matrix& m, double atol = defaults::atol) {
  require_square(m, "eigh input");
  require_finite(m, "eigh input");
  require(is_hermitian(m, atol), ErrorKind::NotHermitian,
          "matrix is not Hermitian (residual " + std::to_string(hermitian_residual(m)) + ")");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(m));
  require(solver.info() == Eigen::Success, ErrorKind::NumericalFailure,
          "Hermitian eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const Matrix& m, double atol = defaults::atol) {
  return eigh(m, atol).values(0);
}

inline double max_eigenvalue(const Matrix& m, double atol = defaults::atol) {
  const auto pairs = eigh(m, atol);
  return pairs.values(pairs.values.size() - 1);
}

/// Spectral decomposition sum_i lambda_i P_i with eigenvalues grouped into
/// distinct values (descending).
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  std::vector<Matrix> projections;
  /// Orthonormal columns spanning each projection's range.
  std::vector<Matrix> eigenvectors;
  double group_tol = 0.0;

  std::size_t size() const { return eigenvalues.size(); }

  int multiplicity(std::size_t i) const { return static_cast<int>(eigenvectors[i].cols()); }

  Matrix reconstruct() const {
    Matrix out = Matrix::Zero(projections.front().rows(), projections.front().cols());
    for (std::size_t i = 0; i < size(); ++i) out += eigenvalues[i] * projections[i];
    return out;
  }
};

/// Groups raw eigenpairs. Grouping is the transitive closure of
/// |lambda_i - lambda_j| <= group_tol, which on a sorted list is the chain of
/// adjacent gaps. Each group reports the mean of its members.
inline SpectralDecomposition group_eigenpairs(const EigenPairs& pairs, double group_tol) {
  const Eigen::Index n = pairs.values.size();
  SpectralDecomposition out;
  out.group_tol = group_tol;
  // Walk descending.
  Eigen::Index i = n - 1;
  while (i >= 0) {
    Eigen::Index j = i;
    while (j - 1 >= 0 && pairs.values(j) - pairs.values(j - 1) <= group_tol) --j;
    const Eigen::Index count = i - j + 1;
    Matrix block = pairs.vectors.middleCols(j, count);
    out.eigenvalues.push_back(pairs.values.segment(j, count).mean());
    out.projections.push_back(block * block.adjoint());
    out.eigenvectors.push_back(std::move(block));
    i = j - 1;
  }
  return out;
}

inline double spectral_radius(const EigenPairs& pairs) {
  return pairs.values.cwiseAbs().maxCoeff();
}

/// Grouped spectral decomposition of a Hermitian matrix. The default grouping
/// tolerance is 1e-8 times the spectral radius.
inline SpectralDecomposition hermitian_spectral(const Matrix& m,
                                                std::optional<double> group_tol = std::nullopt,
                                                double atol = defaults::atol) {
  require(!group_tol || *group_tol >= 0.0, ErrorKind::InvalidArgument, "group_tol must be >= 0");
  const EigenPairs pairs = eigh(m, atol);
  const double tol = group_tol.value_or(defaults::group_rel * spectral_radius(pairs));
  return group_eigenpairs(pairs, tol);
}

struct SupportProjection {
  Matrix projection;
  /// Orthonormal basis of the support (an isometry onto its range).
  Matrix basis;
  int rank = 0;
  double cutoff = defaults::cutoff;

  bool full() const { return rank == projection.rows(); }
};

namespace detail {

inline SupportProjection support_from_pairs(const EigenPairs& pairs, double cutoff) {
  const Eigen::Index n = pairs.values.size();
  const double top = std::max(pairs.values(n - 1), 0.0);
  const double threshold = cutoff * top;
  Eigen::Index first = n;
  while (first > 0 && pairs.values(first - 1) > threshold) --first;
  SupportProjection out;
  out.cutoff = cutoff;
  out.basis = pairs.vectors.rightCols(n - first);
  out.projection = out.basis * out.basis.adjoint();
  out.rank = static_cast<int>(n - first);
  return out;
}

inline void require_psd(const EigenPairs& pairs, double atol, std::string_view name) {
  const double scale = std::max(1.0, pairs.values.cwiseAbs().maxCoeff());
  require(pairs.values(0) >= -atol * scale, ErrorKind::NotPositive,
          std::string(name) + " has negative eigenvalue " + std::to_string(pairs.values(0)));
}

}  // namespace detail

/// Support projection sum{P_i : lambda_i > cutoff * lambda_max} of a PSD matrix.
inline SupportProjection support_projection(const Matrix& a, double cutoff = defaults::cutoff,
                                            double atol = defaults::atol) {
  const EigenPairs pairs = eigh(a, atol);
  detail::require_psd(pairs, atol, "support_projection input");
  return detail::support_from_pairs(pairs, cutoff);
}

/// Applies f to each eigenvalue (no grouping). Used internally where the
/// spectral calculus must not be biased by group averaging.
template <class F>
Matrix apply_spectral(const EigenPairs& pairs, F&& f) {
  const Eigen::Index n = pairs.values.size();
  Eigen::VectorXcd values(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex v = Complex(f(pairs.values(i)));
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorKind::DomainError,
            "function undefined at eigenvalue " + std::to_string(pairs.values(i)));
    values(i) = v;
  }
  return pairs.vectors * values.asDiagonal() * pairs.vectors.adjoint();
}

/// Functional calculus sum_i f(lambda_i) P_i over the grouped spectrum.
/// f may return a real or complex scalar.
template <class F>
  requires std::invocable<F, double>
Matrix matrix_function(F&& f, const Matrix& a, std::optional<double> group_tol = std::nullopt,
                       double atol = defaults::atol) {
  const SpectralDecomposition spec = hermitian_spectral(a, group_tol, atol);
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Complex v = Complex(f(spec.eigenvalues[i]));
    require(std::isfinite(v.real()) && std::isfinite(v.imag()), ErrorKind::DomainError,
            "function undefined at eigenvalue " + std::to_string(spec.eigenvalues[i]));
    out += v * spec.projections[i];
  }
  return out;
}

/// x^s of a PSD matrix restricted to its support, so x^0 = supp x and negative
/// powers are generalized inverses.
inline Matrix psd_power(const EigenPairs& pairs, double s, double cutoff = defaults::cutoff) {
  const double top = std::max(pairs.values(pairs.values.size() - 1), 0.0);
  const double threshold = cutoff * top;
  return apply_spectral(pairs, [&](double x) { return x > threshold ? std::pow(x, s) : 0.0; });
}

inline Matrix psd_power(const Matrix& a, double s, double cutoff = defaults::cutoff,
                        double atol = defaults::atol) {
  const EigenPairs pairs = eigh(a, atol);
  detail::require_psd(pairs, atol, "psd_power input");
  return psd_power(pairs, s, cutoff);
}

/// Generalized inverse with the support cutoff rule.
inline Matrix generalized_inverse(const Matrix& c, double cutoff = defaults::cutoff,
                                  double atol = defaults::atol) {
  return psd_power(c, -1.0, cutoff, atol);
}

/// Positivity of the block matrix [[a, b], [b*, c]]: c >= 0, range(b*) within
/// range(c), and a - b c^- b* >= 0.
inline bool block_positive(const Matrix& a, const Matrix& b, const Matrix& c,
                           double atol = defaults::atol, double cutoff = defaults::cutoff) {
  require_square(a, "block a");
  require_square(c, "block c");
  require(b.rows() == a.rows() && b.cols() == c.rows(), ErrorKind::DimensionMismatch,
          "block b must be rows(a) x rows(c)");
  const EigenPairs cp = eigh(c, atol);
  const double c_scale = std::max(1.0, cp.values.cwiseAbs().maxCoeff());
  if (cp.values(0) < -atol * c_scale) return false;
  const SupportProjection supp = detail::support_from_pairs(cp, cutoff);
  const Matrix off_support = identity(c.rows()) - supp.projection;
  const double b_scale = std::max(1.0, b.norm());
  if ((b * off_support).norm() > 1e-8 * b_scale) return false;
  const Matrix schur = a - b * psd_power(cp, -1.0, cutoff) * b.adjoint();
  const double s_scale = std::max({1.0, a.norm(), b_scale * b_scale / std::max(cp.values.maxCoeff(), 1e-300)});
  return min_eigenvalue(hermitian_part(schur), kInfinity) >= -atol * std::min(s_scale, 1e6);
}

inline Matrix tensor_power(const Matrix& a, int n, int size_cap = defaults::size_cap) {
  require(n >= 1, ErrorKind::InvalidArgument, "tensor_power requires n >= 1");
  double rows = 1.0;
  for (int i = 0; i < n; ++i) rows *= static_cast<double>(a.rows());
  require(rows <= size_cap, ErrorKind::SizeCapExceeded,
          "tensor power has " + std::to_string(static_cast<long long>(rows)) + " rows, cap is " +
              std::to_string(size_cap));
  Matrix out = a;
  for (int i = 1; i < n; ++i) out = kron(out, a);
  return out;
}

/// Trace norm. Hermitian inputs use the eigenvalues, everything else the SVD.
inline double trace_norm(const Matrix& m) {
  if (m.rows() == m.cols() && is_hermitian(m)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

inline double operator_norm(const Matrix& m) {
  if (m.rows() == m.cols() && is_hermitian(m)) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double trace_real(const Matrix& m) { return m.trace().real(); }

/// Orthonormal basis of the kernel of a linear map given as a matrix, using
/// singular values below rel_tol * max(1, sigma_max).
inline Matrix null_space(const Matrix& m, double rel_tol = 1e-8) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? std::max(1.0, sv(0)) : 1.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > rel_tol * top) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

/// Solves a X + X b = y for Hermitian a, b whose spectra sum to nonzero
/// values (e.g. both positive definite), via the two eigenbases.
inline Matrix solve_sylvester_hermitian(const Matrix& a, const Matrix& b, const Matrix& y) {
  require(y.rows() == a.rows() && y.cols() == b.rows(), ErrorKind::DimensionMismatch, "sylvester: shape mismatch");
  const EigenPairs pa = eigh(a, kInfinity);
  const EigenPairs pb = eigh(b, kInfinity);
  Matrix z = pa.vectors.adjoint() * y * pb.vectors;
  for (Eigen::Index j = 0; j < z.cols(); ++j)
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double denom = pa.values(i) + pb.values(j);
      require(std::abs(denom) > 1e-300, ErrorKind::NotInvertible, "sylvester operator is singular");
      z(i, j) /= denom;
    }
  return pa.vectors * z * pb.vectors.adjoint();
}

}  // namespace chanrev
