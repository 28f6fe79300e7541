#pragma once

// Monotone metrics lambda^f_rho(x, y) = Tr (J^f_rho)^-1(x) y with
// J^f_rho = f(Delta_rho) R_rho, chi^2 divergences, and the equality
// conditions for a channel.

#include "chanrev/algebra.hpp"
#include "chanrev/channel.hpp"
#include "chanrev/linalg.hpp"
#include "chanrev/state.hpp"

#include <functional>
#include <optional>
#include <string>

namespace chanrev {

/// Operator monotone f on (0, inf). When nu is set, 1/f(t) = sum_k v_k / (s_k + t).
struct MonotoneFunction {
  std::string tag;
  std::function<double(double)> f;
  bool symmetric = true;
  bool normalized = true;
  std::optional<std::vector<std::pair<double, double>>> nu;  // (s_k, v_k)
  /// |supp nu_f|; infinite for continuous measures.
  double nu_support_size = kInfinity;

  double operator()(double t) const { return f(t); }
};

namespace fisher_catalog {

/// (1 + t) / 2, the smallest monotone metric; nu = 2 delta_1.
inline MonotoneFunction bures() {
  MonotoneFunction m;
  m.tag = "bures";
  m.f = [](double t) { return 0.5 * (1.0 + t); };
  m.nu = std::vector<std::pair<double, double>>{{1.0, 2.0}};
  m.nu_support_size = 1;
  return m;
}

/// (t - 1) / log t.
inline MonotoneFunction kubo_mori() {
  MonotoneFunction m;
  m.tag = "kubo_mori";
  m.f = [](double t) {
    const double e = t - 1.0;
    if (std::abs(e) < 1e-12) return 1.0 + 0.5 * e;
    return e / std::log1p(e);
  };
  return m;
}

/// 2t / (1 + t). Here 1/f = 1/2 + 1/(2t): an atom at 0 and one at infinity,
/// so there is no discrete nu on [0, inf).
inline MonotoneFunction rld() {
  MonotoneFunction m;
  m.tag = "rld";
  m.f = [](double t) { return 2.0 * t / (1.0 + t); };
  m.nu_support_size = 2;
  return m;
}

/// s + t (unnormalized building block, symmetric only for s = 1).
inline MonotoneFunction f_s(double s) {
  require(s >= 0.0, ErrorKind::InvalidArgument, "f_s needs s >= 0");
  MonotoneFunction m;
  m.tag = "f_s(" + std::to_string(s) + ")";
  m.f = [s](double t) { return s + t; };
  m.symmetric = s == 1.0;
  m.normalized = s == 0.0;
  m.nu = std::vector<std::pair<double, double>>{{s, 1.0}};
  m.nu_support_size = 1;
  return m;
}

/// Symmetric normalized f with a discrete nu of 2(dh^2 + dk^2) atoms,
/// log-spaced in [1e-3, 1e3] and closed under s -> 1/s, weights c sqrt(s).
inline MonotoneFunction rich(Eigen::Index dh, Eigen::Index dk) {
  const int count = static_cast<int>(2 * (dh * dh + dk * dk));
  std::vector<std::pair<double, double>> atoms;
  double norm = 0.0;
  for (int k = 0; k < count; ++k) {
    const double u = -3.0 + 6.0 * (k + 0.5) / count;
    const double s = std::pow(10.0, u);
    atoms.emplace_back(s, std::sqrt(s));
    norm += std::sqrt(s) / (s + 1.0);
  }
  for (auto& a : atoms) a.second /= norm;
  MonotoneFunction m;
  m.tag = "rich";
  m.nu = atoms;
  m.nu_support_size = count;
  m.f = [atoms](double t) {
    double inv = 0.0;
    for (auto [s, v] : atoms) inv += v / (s + t);
    return 1.0 / inv;
  };
  return m;
}

inline MonotoneFunction by_tag(const std::string& tag, Eigen::Index dh = 2, Eigen::Index dk = 2) {
  if (tag == "bures") return bures();
  if (tag == "kubo_mori") return kubo_mori();
  if (tag == "rld") return rld();
  if (tag == "rich") return rich(dh, dk);
  throw Error(ErrorKind::InvalidArgument, "unknown monotone function '" + tag + "'");
}

}  // namespace fisher_catalog

/// Largest |f(t) - t f(1/t)| on a 50-point log grid in [1e-3, 1e3].
inline double symmetry_residual(const MonotoneFunction& m) {
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t = std::pow(10.0, -3.0 + 6.0 * k / 49.0);
    worst = std::max(worst, std::abs(m(t) - t * m(1.0 / t)));
  }
  return worst;
}

/// Largest |1/f(t) - sum v/(s+t)| on the same grid (0 without nu).
inline double nu_residual(const MonotoneFunction& m) {
  if (!m.nu) return 0.0;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t = std::pow(10.0, -3.0 + 6.0 * k / 49.0);
    double inv = 0.0;
    for (auto [s, v] : *m.nu) inv += v / (s + t);
    worst = std::max(worst, std::abs(1.0 / m(t) - inv));
  }
  return worst;
}

/// Superoperator weights: J^f_rho acts on P_i x P_j by f(l_i/l_j) l_j.
inline Matrix metric_weights(const DensityOperator& rho, const MonotoneFunction& f) {
  rho.require_invertible("rho");
  const RealVector& l = rho.eigenpairs().values;
  const Eigen::Index d = l.size();
  Matrix w(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = f(l(i) / l(j)) * l(j);
      require(std::isfinite(v) && v > 0, ErrorKind::DomainError, "f must be positive on the spectrum ratios");
      w(i, j) = v;
    }
  return w;
}

/// (J^f_rho)^-1(x) = sum_ij [f(l_i/l_j) l_j]^-1 P_i x P_j.
inline Matrix metric_inverse_apply(const DensityOperator& rho, const MonotoneFunction& f, const Matrix& x) {
  require(x.rows() == rho.dim() && x.cols() == rho.dim(), ErrorKind::DimensionMismatch, "x has wrong shape");
  const Matrix& u = rho.eigenpairs().vectors;
  const Matrix w = metric_weights(rho, f);
  const Matrix xt = u.adjoint() * x * u;
  return u * xt.cwiseQuotient(w) * u.adjoint();
}

/// J^f_rho(y) = sum_ij f(l_i/l_j) l_j P_i y P_j.
inline Matrix metric_apply(const DensityOperator& rho, const MonotoneFunction& f, const Matrix& y) {
  require(y.rows() == rho.dim() && y.cols() == rho.dim(), ErrorKind::DimensionMismatch, "y has wrong shape");
  const Matrix& u = rho.eigenpairs().vectors;
  const Matrix w = metric_weights(rho, f);
  const Matrix yt = u.adjoint() * y * u;
  return u * yt.cwiseProduct(w) * u.adjoint();
}

/// Superoperator matrix of (J^f_rho)^-1 on column-stacked vectors.
inline Matrix metric_inverse_super(const DensityOperator& rho, const MonotoneFunction& f) {
  const Matrix& u = rho.eigenpairs().vectors;
  const Matrix w = metric_weights(rho, f);
  const Matrix basis = kron(u.conjugate(), u);
  Vector diag(w.size());
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) diag(j * w.rows() + i) = 1.0 / w(i, j);
  return basis * diag.asDiagonal() * basis.adjoint();
}

/// lambda^f_rho(x, y) = Tr (J^f_rho)^-1(x) y (real part).
inline double fisher_metric(const DensityOperator& rho, const MonotoneFunction& f, const Matrix& x,
                            const Matrix& y) {
  return (metric_inverse_apply(rho, f, x) * y).trace().real();
}

inline double chi2_divergence(const DensityOperator& sigma, const DensityOperator& rho, const MonotoneFunction& f) {
  const Matrix x = sigma.matrix() - rho.matrix();
  return fisher_metric(rho, f, x, x);
}

/// Smallest eigenvalue of the HS form (J^f_rho)^-1 - T* (J^f_T(rho))^-1 T.
inline double metric_monotonicity_margin(const Channel& t, const DensityOperator& rho, const MonotoneFunction& f) {
  const DensityOperator image = t.apply(rho);
  const Matrix form = metric_inverse_super(rho, f) - t.super().adjoint() * metric_inverse_super(image, f) * t.super();
  return min_eigenvalue(hermitian_part(form), kInfinity);
}

/// Validated traceless Hermitian matrix.
inline Matrix tangent_vector(const Matrix& x, double atol = defaults::atol) {
  require_square(x, "tangent vector");
  require(is_hermitian(x, atol), ErrorKind::NotHermitian, "tangent vector must be Hermitian");
  require(std::abs(x.trace()) <= atol * std::max<double>(1.0, x.rows()), ErrorKind::InvalidArgument,
          "tangent vector must be traceless");
  return hermitian_part(x);
}

/// The open interval of u with rho + u x a state, shrunk by 1%.
inline std::pair<double, double> tangent_interval(const DensityOperator& rho, const Matrix& x) {
  rho.require_invertible("rho");
  const Matrix r = rho.power(-0.5);
  const RealVector mu = eigh(hermitian_part(r * x * r), kInfinity).values;
  const double lo = mu.maxCoeff() > 0 ? -1.0 / mu.maxCoeff() : -1e300;
  const double hi = mu.minCoeff() < 0 ? -1.0 / mu.minCoeff() : 1e300;
  return {0.99 * lo, 0.99 * hi};
}

inline std::vector<double> default_s_grid() {
  std::vector<double> s;
  for (int k = 0; k < 16; ++k) s.push_back(std::pow(10.0, -3.0 + 6.0 * k / 15.0));
  return s;
}

struct GridResidual {
  double at = 0.0;
  double residual = 0.0;
};

struct FisherEqualityResult {
  /// lambda_rho(x, x) - lambda_T(rho)(T x, T x), >= 0 by monotonicity.
  double metric_gap = 0.0;
  std::vector<GridResidual> per_s;
  double max_per_s = 0.0;
  std::vector<GridResidual> cocycle;
  double max_cocycle = 0.0;
  /// ||rho^-1/2 x rho^-1/2 - T*(T(rho)^-1/2 T(x) T(rho)^-1/2)||
  double sqrt_residual = 0.0;
};

/// Equality diagnostics for the metric at rho along x:
///  per s: (s R_rho + L_rho)^-1(x) vs T*[(s R_T(rho) + L_T(rho))^-1(T x)],
///  per t: rho^{it} x rho^{-it-1} vs T*(T(rho)^{it} T(x) T(rho)^{-it-1}),
///  and the t = i/2 continuation with square roots.
inline FisherEqualityResult fisher_equality_check(const Channel& t, const DensityOperator& rho, const Matrix& x,
                                                  const MonotoneFunction& f, std::vector<double> s_grid = {},
                                                  const std::vector<double>& t_grid = default_t_grid()) {
  rho.require_invertible("rho");
  const DensityOperator image = t.apply(rho);
  image.require_invertible("T(rho)");
  const Channel adj = t.adjoint();
  const Matrix tx = t.apply(x);
  FisherEqualityResult out;
  out.metric_gap = fisher_metric(rho, f, x, x) - fisher_metric(image, f, tx, tx);

  if (s_grid.empty()) {
    if (f.nu)
      for (auto [s, v] : *f.nu) s_grid.push_back(s);
    else
      s_grid = default_s_grid();
  }
  for (double s : s_grid) {
    const MonotoneFunction fs = fisher_catalog::f_s(s);
    const Matrix lhs = metric_inverse_apply(rho, fs, x);
    const Matrix rhs = adj.apply(metric_inverse_apply(image, fs, tx));
    const double res = (lhs - rhs).norm();
    out.per_s.push_back({s, res});
    out.max_per_s = std::max(out.max_per_s, res);
  }

  const Matrix rho_inv = rho.power(-1.0);
  const Matrix img_inv = image.power(-1.0);
  for (double tt : t_grid) {
    const Matrix ru = rho.imag_power(tt);
    const Matrix iu = image.imag_power(tt);
    const Matrix lhs = ru * x * ru.adjoint() * rho_inv;
    const Matrix rhs = adj.apply(Matrix(iu * tx * iu.adjoint() * img_inv));
    const double res = (lhs - rhs).norm();
    out.cocycle.push_back({tt, res});
    out.max_cocycle = std::max(out.max_cocycle, res);
  }

  const Matrix rs = rho.power(-0.5);
  const Matrix is = image.power(-0.5);
  out.sqrt_residual = (rs * x * rs - adj.apply(Matrix(is * tx * is))).norm();
  return out;
}

/// Distinct eigenvalue ratios l_i / l_j of rho, i.e. spec(Delta_rho).
inline std::vector<double> modular_spectrum(const DensityOperator& rho, double rel_tol = 1e-9) {
  const RealVector& l = rho.eigenpairs().values;
  std::vector<double> r;
  for (Eigen::Index i = 0; i < l.size(); ++i)
    for (Eigen::Index j = 0; j < l.size(); ++j)
      if (l(j) > 0 && l(i) > 0) r.push_back(l(i) / l(j));
  std::sort(r.begin(), r.end());
  std::vector<double> out;
  for (double v : r)
    if (out.empty() || v - out.back() > rel_tol * v) out.push_back(v);
  return out;
}

/// |spec(Delta_rho) u spec(Delta_T(rho))|.
inline std::size_t modular_spectrum_union_size(const DensityOperator& rho, const DensityOperator& image,
                                               double rel_tol = 1e-9) {
  std::vector<double> all = modular_spectrum(rho, rel_tol);
  const auto b = modular_spectrum(image, rel_tol);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  std::size_t n = 0;
  double last = -1.0;
  for (double v : all)
    if (n == 0 || v - last > rel_tol * v) {
      ++n;
      last = v;
    }
  return n;
}

}  // namespace chanrev
