#pragma once

#include "chanrev/linalg.hpp"
#include "chanrev/random.hpp"

namespace chanrev {

/// PSD unit-trace matrix with its eigenpairs, grouped spectrum and support
/// computed once at construction.
class DensityOperator {
 public:
  explicit DensityOperator(const Matrix& m, double atol = defaults::atol) {
    require_square(m, "density operator");
    require_finite(m, "density operator");
    require(is_hermitian(m, atol), ErrorKind::NotHermitian, "density operator is not Hermitian");
    matrix_ = hermitian_part(m);
    pairs_ = eigh(matrix_, kInfinity);
    require(pairs_.values(0) >= -atol, ErrorKind::NotPositive,
            "density operator has negative eigenvalue " + std::to_string(pairs_.values(0)));
    const double tr = matrix_.trace().real();
    require(std::abs(tr - 1.0) <= std::max(atol, 1e-12 * matrix_.rows()), ErrorKind::InvalidArgument,
            "density operator trace is " + std::to_string(tr));
    spectral_ = group_eigenpairs(pairs_, defaults::group_rel * spectral_radius(pairs_));
    support_ = detail::support_from_pairs(pairs_, defaults::cutoff);
  }

  /// Symmetrizes, clips eigenvalues that are negative only through roundoff
  /// and renormalizes. Meant for states produced by chains of channel
  /// applications.
  static DensityOperator normalized(const Matrix& m, double atol = 1e-8) {
    require_square(m, "density operator");
    Matrix h = hermitian_part(m);
    const EigenPairs p = eigh(h, kInfinity);
    const double scale = std::max(1.0, p.values.cwiseAbs().maxCoeff());
    require(p.values(0) >= -atol * scale, ErrorKind::NotPositive,
            "matrix has negative eigenvalue " + std::to_string(p.values(0)));
    if (p.values(0) < 0) h = apply_spectral(p, [](double x) { return std::max(x, 0.0); });
    const double tr = h.trace().real();
    require(tr > 0, ErrorKind::NotPositive, "matrix has zero trace");
    return DensityOperator(hermitian_part(h / tr));
  }

  static DensityOperator maximally_mixed(Eigen::Index d) {
    return DensityOperator(identity(d) / static_cast<double>(d));
  }

  static DensityOperator random(Eigen::Index d, Rng& rng, Eigen::Index rank = -1) {
    return DensityOperator(random_density_matrix(d, rng, rank));
  }

  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  const EigenPairs& eigenpairs() const { return pairs_; }
  const SpectralDecomposition& spectral() const { return spectral_; }
  const SupportProjection& support() const { return support_; }
  bool invertible() const { return support_.full(); }
  double min_eigenvalue() const { return pairs_.values(0); }

  /// rho^s on the support (rho^0 = supp rho, negative s gives the
  /// generalized inverse power).
  Matrix power(double s) const { return psd_power(pairs_, s, support_.cutoff); }

  /// log rho on the support, zero on the kernel.
  Matrix log() const {
    const double threshold = support_threshold();
    return apply_spectral(pairs_, [&](double x) { return x > threshold ? std::log(x) : 0.0; });
  }

  /// rho^{it} on the support, zero on the kernel.
  Matrix imag_power(double t) const {
    const double threshold = support_threshold();
    return apply_spectral(pairs_, [&](double x) {
      return x > threshold ? std::exp(Complex(0.0, t * std::log(x))) : Complex(0.0);
    });
  }

  void require_invertible(std::string_view name) const {
    require(invertible(), ErrorKind::NotInvertible,
            std::string(name) + " is not invertible (rank " + std::to_string(support_.rank) + " of " +
                std::to_string(dim()) + ")");
  }

 private:
  double support_threshold() const {
    return support_.cutoff * std::max(pairs_.values(pairs_.values.size() - 1), 0.0);
  }

  Matrix matrix_;
  EigenPairs pairs_;
  SpectralDecomposition spectral_;
  SupportProjection support_;
};

/// True if supp sigma <= supp rho, judged by the weight Tr sigma (I - supp rho).
inline bool support_contained(const DensityOperator& sigma, const DensityOperator& rho,
                              double tol = 1e-9) {
  const Matrix off = identity(rho.dim()) - rho.support().projection;
  return (off * sigma.matrix()).trace().real() <= tol;
}

}  // namespace chanrev
