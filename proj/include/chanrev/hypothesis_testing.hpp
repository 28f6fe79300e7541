#pragma once

// Binary hypothesis testing between rho (null) and sigma (alternative):
// Neyman-Pearson projections, Bayes error, Chernoff and Hoeffding distances,
// and trace-norm equality checks for n copies.

#include "chanrev/channel.hpp"
#include "chanrev/divergence.hpp"
#include "chanrev/linalg.hpp"
#include "chanrev/state.hpp"

#include <algorithm>
#include <cmath>

namespace chanrev {

struct NPTestResult {
  double t = 0.0;
  /// supp (sigma - t rho)_+
  SupportProjection P_plus;
  /// kernel projection of sigma - t rho
  SupportProjection P_zero;
  double trace_norm = 0.0;
  /// Tr (sigma - t rho) P_plus, the sum of the positive eigenvalues.
  double positive_part = 0.0;
};

namespace detail {

inline SupportProjection projection_from_columns(const Matrix& vectors, Eigen::Index first, Eigen::Index count,
                                                 double cutoff) {
  SupportProjection p;
  p.basis = vectors.middleCols(first, count);
  p.projection = p.basis * p.basis.adjoint();
  p.rank = static_cast<int>(count);
  p.cutoff = cutoff;
  return p;
}

}  // namespace detail

/// Spectral split of sigma - t rho. Eigenvalues with |lambda| <= kernel_rel *
/// max(1, t) count as zero.
inline NPTestResult np_test(const DensityOperator& sigma, const DensityOperator& rho, double t,
                            double kernel_rel = 1e-12) {
  require(t >= 0.0, ErrorKind::InvalidArgument, "np_test needs t >= 0");
  require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
  const Matrix diff = sigma.matrix() - t * rho.matrix();
  const EigenPairs pairs = eigh(diff, kInfinity);
  const double tol = kernel_rel * std::max(1.0, t);
  const Eigen::Index n = pairs.values.size();
  Eigen::Index neg = 0;
  while (neg < n && pairs.values(neg) < -tol) ++neg;
  Eigen::Index pos_start = neg;
  while (pos_start < n && pairs.values(pos_start) <= tol) ++pos_start;
  NPTestResult r;
  r.t = t;
  r.P_plus = detail::projection_from_columns(pairs.vectors, pos_start, n - pos_start, tol);
  r.P_zero = detail::projection_from_columns(pairs.vectors, neg, pos_start - neg, tol);
  r.trace_norm = pairs.values.cwiseAbs().sum();
  r.positive_part = pairs.values.tail(n - pos_start).sum();
  return r;
}

/// Pi_s = (1 - ||(1-s) sigma - s rho||_1) / 2.
inline double bayes_error(const DensityOperator& sigma, const DensityOperator& rho, double s) {
  require(s >= 0.0 && s < 1.0, ErrorKind::InvalidArgument, "bayes_error needs s in [0, 1)");
  return 0.5 * (1.0 - trace_norm(Matrix((1.0 - s) * sigma.matrix() - s * rho.matrix())));
}

/// s alpha(M) + (1-s) beta(M) with alpha(M) = Tr rho M, beta(M) = Tr sigma (I - M).
inline double test_error(const DensityOperator& sigma, const DensityOperator& rho, double s, const Matrix& m) {
  const double alpha = (rho.matrix() * m).trace().real();
  const double beta = (sigma.matrix() * (identity(m.rows()) - m)).trace().real();
  return s * alpha + (1.0 - s) * beta;
}

/// Q(u) = Tr sigma^u rho^(1-u) with x^0 = supp x, evaluated from the joint
/// eigen-data: sum over a_i > 0, b_j > 0 of a_i^u b_j^(1-u) |<e_i, f_j>|^2.
class PowerTraceCurve {
 public:
  PowerTraceCurve(const DensityOperator& sigma, const DensityOperator& rho) {
    require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
    const auto& sp = sigma.eigenpairs();
    const auto& rp = rho.eigenpairs();
    const double s_thr = sigma.support().cutoff * std::max(sp.values.maxCoeff(), 0.0);
    const double r_thr = rho.support().cutoff * std::max(rp.values.maxCoeff(), 0.0);
    const Matrix overlap = sp.vectors.adjoint() * rp.vectors;
    for (Eigen::Index i = 0; i < sp.values.size(); ++i) {
      if (sp.values(i) <= s_thr) continue;
      for (Eigen::Index j = 0; j < rp.values.size(); ++j) {
        if (rp.values(j) <= r_thr) continue;
        const double o = std::norm(overlap(i, j));
        if (o <= 1e-24) continue;
        terms_.push_back({std::log(sp.values(i)), std::log(rp.values(j)), o});
      }
    }
  }

  double operator()(double u) const {
    double q = 0.0;
    for (const auto& t : terms_) q += t.w * std::exp(u * t.la + (1.0 - u) * t.lb);
    return q;
  }

  double derivative(double u) const {
    double q = 0.0;
    for (const auto& t : terms_) q += t.w * (t.la - t.lb) * std::exp(u * t.la + (1.0 - u) * t.lb);
    return q;
  }

  bool empty() const { return terms_.empty(); }

 private:
  struct Term {
    double la, lb, w;
  };
  std::vector<Term> terms_;
};

namespace detail {

/// Maximizes a unimodal g on [lo, hi]: grid of `grid` points, then golden
/// section on the bracket around the best grid point.
template <class G>
std::pair<double, double> maximize_unimodal(G&& g, double lo, double hi, int grid = 64, int iters = 200) {
  double best_x = lo;
  double best = g(lo);
  int best_k = 0;
  for (int k = 1; k < grid; ++k) {
    const double x = lo + (hi - lo) * k / (grid - 1);
    const double v = g(x);
    if (v > best) {
      best = v;
      best_x = x;
      best_k = k;
    }
  }
  double a = lo + (hi - lo) * std::max(best_k - 1, 0) / (grid - 1);
  double b = lo + (hi - lo) * std::min(best_k + 1, grid - 1) / (grid - 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < iters && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + phi * (b - a);
      gd = g(d);
    }
  }
  for (double x : {c, d, a, b}) {
    const double v = g(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return {best_x, best};
}

}  // namespace detail

struct ChernoffResult {
  double value = 0.0;
  double minimizer_u = 0.0;
};

/// C(sigma, rho) = -log min_{0<=u<=1} Tr sigma^u rho^(1-u); +inf when the minimum is 0.
inline ChernoffResult chernoff(const DensityOperator& sigma, const DensityOperator& rho) {
  const PowerTraceCurve q(sigma, rho);
  if (q.empty()) return {kInfinity, 0.5};
  auto [u, neg] = detail::maximize_unimodal([&](double x) { return -q(x); }, 0.0, 1.0);
  const double m = -neg;
  if (!(m > 1e-300)) return {kInfinity, u};
  return {std::max(0.0, -std::log(m)), u};
}

struct HoeffdingResult {
  double value = 0.0;
  /// Maximizing u; 1 when the supremum is the u -> 1 limit.
  double maximizer_u = 0.0;
  bool limit_used = false;
  /// The capped supremum moved by less than 1e-6 between caps 1-1e-6 and 1-1e-7.
  bool cap_stable = true;
};

/// H_r(sigma, rho) = sup_{0<=u<1} (-u r - log Tr sigma^u rho^(1-u)) / (1-u).
/// With this argument order H_0 = S(sigma, rho) and the plateau value for
/// large r is -log Tr q rho, q = supp sigma. The u -> 1 end is handled
/// analytically from Q(1) and Q'(1).
inline HoeffdingResult hoeffding_detail(const DensityOperator& sigma, const DensityOperator& rho, double r) {
  require(r >= 0.0, ErrorKind::InvalidArgument, "hoeffding needs r >= 0");
  const PowerTraceCurve q(sigma, rho);
  HoeffdingResult out;
  if (q.empty()) {
    out.value = kInfinity;
    return out;
  }
  auto g_of_u = [&](double u) {
    const double qu = q(u);
    if (!(qu > 0)) return kInfinity;
    return (-u * r - std::log(qu)) / (1.0 - u);
  };
  // w = 1/(1-u) makes the objective concave; search in log w.
  const double log_w_max = std::log(1e6);
  auto g_of_lw = [&](double lw) { return g_of_u(1.0 - std::exp(-lw)); };
  auto [lw, best] = detail::maximize_unimodal(g_of_lw, 0.0, log_w_max);
  out.value = best;
  out.maximizer_u = 1.0 - std::exp(-lw);

  const double q1 = q(1.0);
  const double n1 = -r - std::log(q1);
  if (n1 > 1e-12) {
    out.value = kInfinity;
    out.maximizer_u = 1.0;
    out.limit_used = true;
    return out;
  }
  if (n1 >= -1e-12) {
    const double limit = r + q.derivative(1.0) / q1;
    if (limit > out.value) {
      out.value = limit;
      out.maximizer_u = 1.0;
      out.limit_used = true;
    }
    return out;
  }
  const double at6 = g_of_u(1.0 - 1e-6);
  const double at7 = g_of_u(1.0 - 1e-7);
  out.cap_stable = !(at7 > out.value + 1e-6) || std::abs(at7 - at6) < 1e-6;
  return out;
}

inline double hoeffding(const DensityOperator& sigma, const DensityOperator& rho, double r) {
  return hoeffding_detail(sigma, rho, r).value;
}

/// S_sigma(rho, sigma) = -log Tr q rho + Tr rho (log rho - log sigma) q / Tr q rho, q = supp sigma.
inline double hoeffding_threshold(const DensityOperator& sigma, const DensityOperator& rho) {
  require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
  const Matrix& q = sigma.support().projection;
  const double tq = (q * rho.matrix()).trace().real();
  if (!(tq > 0)) return kInfinity;
  const Matrix lr = rho.log();
  const Matrix ls = sigma.log();
  const double cross = (rho.matrix() * (lr - ls) * q).trace().real();
  return -std::log(tq) + cross / tq;
}

/// Eigenvalues of d(sigma, rho)^{(x)n} (products of eigenvalues of d),
/// midpoints between consecutive values, 0 and max + 1.
inline std::vector<double> default_l1_grid(const DensityOperator& sigma, const DensityOperator& rho, int n = 1) {
  const Matrix r_inv_sqrt = rho.power(-0.5);
  const Matrix d = hermitian_part(r_inv_sqrt * sigma.matrix() * r_inv_sqrt);
  const RealVector ev = eigh(d, kInfinity).values;
  std::vector<double> vals{1.0};
  for (int k = 0; k < n; ++k) {
    std::vector<double> next;
    for (double v : vals)
      for (Eigen::Index i = 0; i < ev.size(); ++i) next.push_back(v * std::max(ev(i), 0.0));
    vals = std::move(next);
  }
  std::sort(vals.begin(), vals.end());
  std::vector<double> uniq;
  for (double v : vals)
    if (uniq.empty() || v - uniq.back() > 1e-12 * std::max(1.0, v)) uniq.push_back(v);
  std::vector<double> grid{0.0};
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    if (uniq[i] > 0) grid.push_back(uniq[i]);
    if (i + 1 < uniq.size()) grid.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  }
  grid.push_back(uniq.back() + 1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

struct L1Gap {
  double t = 0.0;
  double gap = 0.0;
};

struct L1FamilyResult {
  int n = 1;
  double max_gap = 0.0;
  double min_gap = 0.0;
  std::vector<L1Gap> per_t;
};

/// ||sigma^{(x)n} - t rho^{(x)n}||_1 - ||T(sigma)^{(x)n} - t T(rho)^{(x)n}||_1 per t.
inline L1FamilyResult l1_equality_family(const Channel& t_map, const DensityOperator& sigma,
                                         const DensityOperator& rho, std::vector<double> t_grid = {}, int n = 1,
                                         int size_cap = defaults::size_cap) {
  require(n >= 1, ErrorKind::InvalidArgument, "n must be >= 1");
  if (t_grid.empty()) t_grid = default_l1_grid(sigma, rho, n);
  const Matrix s_n = tensor_power(sigma.matrix(), n, size_cap);
  const Matrix r_n = tensor_power(rho.matrix(), n, size_cap);
  const Matrix ts_n = tensor_power(t_map.apply(sigma.matrix()), n, size_cap);
  const Matrix tr_n = tensor_power(t_map.apply(rho.matrix()), n, size_cap);
  L1FamilyResult out;
  out.n = n;
  out.max_gap = -kInfinity;
  out.min_gap = kInfinity;
  for (double t : t_grid) {
    require(t >= 0.0, ErrorKind::InvalidArgument, "grid values must be >= 0");
    const double gap = trace_norm(Matrix(s_n - t * r_n)) - trace_norm(Matrix(ts_n - t * tr_n));
    out.per_t.push_back({t, gap});
    out.max_gap = std::max(out.max_gap, gap);
    out.min_gap = std::min(out.min_gap, gap);
  }
  return out;
}

}  // namespace chanrev
