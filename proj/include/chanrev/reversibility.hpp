#pragma once

// Reversibility of a channel on a family of states: the commutant
// Radon-Nikodym derivative, fixed-point algebras, multiplicative domains,
// factorization of states, and the condition report tying them together.

#include "chanrev/algebra.hpp"
#include "chanrev/channel.hpp"
#include "chanrev/divergence.hpp"
#include "chanrev/fisher.hpp"
#include "chanrev/hypothesis_testing.hpp"
#include "chanrev/linalg.hpp"
#include "chanrev/state.hpp"

#include <array>
#include <atomic>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>

namespace chanrev {

struct RNDerivative {
  Matrix matrix;
  double norm = 0.0;
};

/// d(sigma, rho) = rho^-1/2 sigma rho^-1/2 on supp rho.
inline RNDerivative rn_derivative(const DensityOperator& sigma, const DensityOperator& rho) {
  require(sigma.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma and rho dimensions differ");
  require(support_contained(sigma, rho), ErrorKind::SupportViolation, "supp sigma is not contained in supp rho");
  const Matrix r = rho.power(-0.5);
  RNDerivative d;
  d.matrix = hermitian_part(r * sigma.matrix() * r);
  d.norm = operator_norm(d.matrix);
  return d;
}

/// <x, y>_rho = Tr x* rho^1/2 y rho^1/2.
inline Complex rho_inner(const DensityOperator& rho, const Matrix& x, const Matrix& y) {
  const Matrix r = rho.power(0.5);
  return (x.adjoint() * r * y * r).trace();
}

// ---------------------------------------------------------------------------
// Fixed points and multiplicative domain

struct FixedPointAlgebra {
  AlgebraBasis algebra;
  /// Spectral projection of the superoperator onto eigenvalue 1 (the Cesaro limit).
  Channel expectation;
  /// E*(I/d), a faithful invariant state of the adjoint.
  Matrix invariant_state;
};

inline FixedPointAlgebra fixed_point_algebra(const Channel& phi, double rel_tol = 1e-8) {
  require(phi.in_dim() == phi.out_dim(), ErrorKind::DimensionMismatch, "fixed points need a map of M_d into itself");
  const Eigen::Index d = phi.in_dim();
  const Matrix m = phi.super() - Matrix::Identity(d * d, d * d);
  const Matrix right = null_space(m, rel_tol);
  const Matrix left = null_space(Matrix(m.adjoint()), rel_tol);
  require(right.cols() == left.cols() && right.cols() > 0, ErrorKind::NumericalDegeneracy,
          "eigenvalue 1 is not semisimple at this tolerance");

  FixedPointAlgebra out;
  out.algebra = AlgebraBasis(d);
  for (Eigen::Index k = 0; k < right.cols(); ++k) out.algebra.add(unvec(right.col(k), d, d), 1e-10);
  const double closure = out.algebra.closure_residual();
  require(closure <= 1e-7, ErrorKind::NotAnAlgebra,
          "fixed points are not closed under products (residual " + std::to_string(closure) + ")");

  const Matrix gram = left.adjoint() * right;
  const Matrix e = right * gram.fullPivLu().solve(Matrix(left.adjoint()));
  out.expectation = Channel::from_super(e, d, d);
  out.invariant_state = hermitian_part(unvec(e.adjoint() * vec(identity(d)), d, d) / static_cast<double>(d));
  const EigenPairs ip = eigh(out.invariant_state, kInfinity);
  require(ip.values(0) > defaults::cutoff * std::max(ip.values.maxCoeff(), 1e-300), ErrorKind::NotInvertible,
          "the invariant state is not faithful");
  return out;
}

struct MembershipResult {
  bool member = false;
  double residual = 0.0;
};

/// max(||Phi(a*a) - Phi(a)*Phi(a)||, ||Phi(aa*) - Phi(a)Phi(a)*||) against 1e-8 max(1, ||a||^2).
inline MembershipResult multiplicative_domain_membership(const Channel& phi, const Matrix& a) {
  require(a.rows() == phi.in_dim() && a.cols() == phi.in_dim(), ErrorKind::DimensionMismatch, "a has wrong shape");
  const Matrix pa = phi.apply(a);
  const double r1 = (phi.apply(Matrix(a.adjoint() * a)) - pa.adjoint() * pa).norm();
  const double r2 = (phi.apply(Matrix(a * a.adjoint())) - pa * pa.adjoint()).norm();
  MembershipResult out;
  out.residual = std::max(r1, r2);
  out.member = out.residual <= 1e-8 * std::max(1.0, a.squaredNorm());
  return out;
}

// ---------------------------------------------------------------------------
// Factorization

struct Factorization {
  AlgebraBasis fixed;        // F_Phi in the input algebra, Phi = T* o T_rho
  AlgebraBasis fixed_tilde;  // F_Phi~ in the output algebra, Phi~ = T_rho o T*
  BlockStructure blocks;     // of F_Phi
  Matrix rho_A;              // E(rho), E the trace-preserving expectation onto F_Phi
  Matrix rho_B;              // rho_A^-1 rho, in the relative commutant
  Matrix rho0_A;             // T_rho(rho_A)
  std::vector<Matrix> sigma0_A;
  std::vector<double> state_residual;  // ||sigma - T*(sigma0_A) rho_B||_1
  std::vector<double> image_residual;  // ||T(sigma) - sigma0_A T(rho_B)||_1
  double rho_residual = 0.0;           // ||rho - T*(rho0_A) rho_B||_1
  double rho0_residual = 0.0;          // ||T(rho) - rho0_A T(rho_B)||_1
  double commutant_residual = 0.0;     // max ||[rho_B, f]|| over the basis of F_Phi
  double recovery_choi_min = 0.0;
  double recovery_tp_residual = 0.0;

  double max_residual() const {
    double m = std::max({rho_residual, rho0_residual, commutant_residual});
    for (double r : state_residual) m = std::max(m, r);
    for (double r : image_residual) m = std::max(m, r);
    return m;
  }
};

/// Splits rho and each sigma into a part carried through T and a common
/// factor rho_B that T forgets. Requires T to recover every sigma.
inline Factorization factorize(const Channel& t, const DensityOperator& rho, const std::vector<DensityOperator>& sigmas,
                               double recovery_tol = 1e-8) {
  rho.require_invertible("rho");
  const DensityOperator image = t.apply(rho);
  image.require_invertible("T(rho)");
  const Channel recovery = petz_recovery(t, rho, true);
  const Channel dual = recovery.adjoint();
  const Channel adj = t.adjoint();

  std::vector<DensityOperator> images;
  for (const auto& s : sigmas) {
    require(s.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma dimension mismatch");
    images.push_back(t.apply(s));
    const double r = trace_norm(Matrix(recovery.apply(images.back().matrix()) - s.matrix()));
    require(r <= recovery_tol, ErrorKind::NotReversible,
            "the Petz map does not recover sigma (residual " + std::to_string(r) + ")");
  }

  Factorization f;
  f.fixed = fixed_point_algebra(compose(adj, dual)).algebra;
  f.fixed_tilde = fixed_point_algebra(compose(dual, adj)).algebra;
  f.blocks = structure_decomposition(f.fixed);
  f.rho_A = hermitian_part(f.fixed.project(rho.matrix()));
  const DensityOperator rho_a = DensityOperator::normalized(f.rho_A);
  f.rho_B = rho_a.power(-1.0) * rho.matrix();
  f.rho0_A = hermitian_part(dual.apply(f.rho_A));
  for (const auto& b : f.fixed.basis()) f.commutant_residual = std::max(f.commutant_residual, commutator(f.rho_B, b).norm());

  const Matrix t_rho_b = t.apply(f.rho_B);
  f.rho_residual = trace_norm(Matrix(rho.matrix() - adj.apply(f.rho0_A) * f.rho_B));
  f.rho0_residual = trace_norm(Matrix(image.matrix() - f.rho0_A * t_rho_b));

  const EigenPairs r0 = eigh(f.rho0_A, kInfinity);
  const Matrix r0_sqrt = psd_power(r0, 0.5);
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const Matrix d0 = rn_derivative(images[k], image).matrix;
    const Matrix s0 = hermitian_part(r0_sqrt * d0 * r0_sqrt);
    f.sigma0_A.push_back(s0);
    f.state_residual.push_back(trace_norm(Matrix(sigmas[k].matrix() - adj.apply(s0) * f.rho_B)));
    f.image_residual.push_back(trace_norm(Matrix(images[k].matrix() - s0 * t_rho_b)));
  }
  f.recovery_choi_min = min_eigenvalue(hermitian_part(recovery.choi()), kInfinity);
  f.recovery_tp_residual = recovery.trace_preserving_residual();
  return f;
}

/// {rho^{is} sigma rho^{-is}} over sigmas and s in the grid (s = 0 gives sigma).
inline std::vector<DensityOperator> extended_family(const std::vector<DensityOperator>& sigmas,
                                                    const DensityOperator& rho, const std::vector<double>& s_grid) {
  rho.require_invertible("rho");
  std::vector<DensityOperator> out;
  for (const auto& s : sigmas) {
    require(s.dim() == rho.dim(), ErrorKind::DimensionMismatch, "sigma dimension mismatch");
    for (double t : s_grid) {
      const Matrix u = rho.imag_power(t);
      out.emplace_back(hermitian_part(u * s.matrix() * u.adjoint()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Condition report

enum class Verdict { Holds, Fails, Inconclusive };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct CheckOptions {
  std::vector<double> t_grid = default_t_grid();
  std::vector<double> family_s_grid = default_t_grid();
  std::vector<double> power_s = {0.25, 0.5, 0.75};
  std::vector<double> hoeffding_r = {0.0, 0.1, 1.0};
  int n_max = 2;
  int size_cap = defaults::size_cap;
  /// Optional S_0 for the r_0 rule; r_0 / 2 joins the Hoeffding grid.
  std::optional<std::vector<DensityOperator>> s0;
  double r0_epsilon = 1e-3;
  double hold_rel = 1e-8;
  double fail_rel = 1e-4;
  bool include_fisher = true;
  /// 0 reads CHANREV_THREADS (default 1).
  int threads = 0;
  std::uint64_t seed = 0;
  int samples = 50;
};

struct ConditionResult {
  std::string id;
  std::string description;
  /// Largest raw residual over the family.
  double residual = 0.0;
  /// Largest residual divided by its scale; the verdict is read from this.
  double relative = 0.0;
  Verdict verdict = Verdict::Holds;
  std::vector<double> per_sigma;
  bool evaluated = true;
};

struct StandingConditions {
  PositivityReport positivity;
  bool petz_dual_schwarz_sampled = true;
  double petz_dual_schwarz_worst = 0.0;
  bool rho_invertible = true;
  bool image_invertible = true;
  bool compressed = false;
  Eigen::Index working_in_dim = 0;
  Eigen::Index working_out_dim = 0;
};

struct Diagnostics {
  /// max ||d(T sigma, T rho) - T_rho(d(sigma, rho))||.
  double functoriality = 0.0;
  /// max ||T_sigma(a) - T_rho(a)|| over matrix units a of supp sigma.
  double petz_independence = 0.0;
  /// max distance of rho^{it} d rho^{-it} to the algebra generated by T*(F_Phi~ n M_T*).
  double multiplicative_domain = 0.0;
  bool multiplicative_domain_evaluated = false;
  Eigen::Index fixed_point_dim = 0;
  Eigen::Index fixed_point_tilde_dim = 0;
  double r0 = std::numeric_limits<double>::quiet_NaN();
};

struct ReversibilityReport {
  std::vector<ConditionResult> conditions;
  Verdict overall = Verdict::Inconclusive;
  /// C1 holds => nothing fails, and C1 fails => one of C2..C6 fails.
  bool consistent = true;
  std::vector<std::string> notes;
  StandingConditions standing;
  Channel recovery;
  std::optional<Factorization> factorization;
  Diagnostics diagnostics;

  const ConditionResult& condition(const std::string& id) const {
    for (const auto& c : conditions)
      if (c.id == id) return c;
    throw Error(ErrorKind::InvalidArgument, "no condition '" + id + "'");
  }
};

namespace detail {

inline Verdict classify(double relative, double hold_rel, double fail_rel) {
  if (!(relative == relative)) return Verdict::Inconclusive;
  if (relative <= hold_rel) return Verdict::Holds;
  if (relative >= fail_rel) return Verdict::Fails;
  return Verdict::Inconclusive;
}

/// |a - b| / max(1, |a|, |b|), with equal infinities giving 0.
inline double scaled_gap(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return (a == b) ? 0.0 : kInfinity;
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double l1_relative(const L1FamilyResult& r) {
  double m = 0.0;
  for (const auto& g : r.per_t) m = std::max(m, std::abs(g.gap) / std::max(1.0, g.t));
  return m;
}

inline int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CHANREV_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

/// Runs body(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Per-sigma raw residuals and relative values, keyed by condition index.
constexpr int kConditionCount = 12;
inline const char* const kConditionIds[kConditionCount] = {"C1", "C2", "C3", "C4",  "C5",  "C6",
                                                           "C7", "C7S", "C8", "C9", "C10", "C11"};
inline const char* const kConditionText[kConditionCount] = {
    "Petz recovery ||T_rho*(T sigma) - sigma||_1",
    "relative entropy preserved",
    "T*(T(sigma)^{it} T(rho)^{-it}) = sigma^{it} rho^{-it} (holds on grid)",
    "Tr sigma^s rho^(1-s) preserved",
    "T*(d(T sigma, T rho)) = d(sigma, rho)",
    "d(sigma, rho) in the fixed-point algebra of T* o T_rho",
    "||sigma - t rho||_1 preserved on the extended family",
    "||sigma - t rho||_1 preserved on the family",
    "n-copy ||sigma^n - t rho^n||_1 preserved",
    "Chernoff distance preserved on sigma and (sigma + rho)/2",
    "Hoeffding distance preserved on the r grid",
    "monotone metrics and chi^2 preserved on Lin(S)"};

struct SigmaResult {
  std::array<double, kConditionCount> raw{};
  std::array<double, kConditionCount> rel{};
  double functoriality = 0.0;
  double petz_independence = 0.0;
  double mult_domain = 0.0;
};

inline void note_max(SigmaResult& s, int k, double raw, double rel) {
  s.raw[k] = std::max(s.raw[k], raw);
  s.rel[k] = std::max(s.rel[k], rel);
}

/// T_sigma restricted to matrix units of supp sigma versus T_rho on the same inputs.
inline double petz_independence(const Channel& t, const DensityOperator& sigma, const DensityOperator& image_sigma,
                                const Channel& dual_rho) {
  const Matrix q = sigma.support().basis;
  const Matrix s_sqrt = sigma.power(0.5);
  const Matrix i_inv_sqrt = image_sigma.power(-0.5);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < q.cols(); ++i)
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      const Matrix a = q.col(i) * q.col(j).adjoint();
      const Matrix ts = i_inv_sqrt * t.apply(Matrix(s_sqrt * a * s_sqrt)) * i_inv_sqrt;
      worst = std::max(worst, (ts - dual_rho.apply(a)).norm());
    }
  return worst;
}

}  // namespace detail

/// Evaluates every equivalent condition for reversibility of T on
/// sigmas u {rho}. If rho or T(rho) is singular the problem is first
/// compressed to supp rho -> supp T(rho).
inline ReversibilityReport check_conditions(const Channel& t_full, const std::vector<DensityOperator>& sigmas_full,
                                            const DensityOperator& rho_full, const CheckOptions& opt = {}) {
  require(rho_full.dim() == t_full.in_dim(), ErrorKind::DimensionMismatch, "rho dimension must equal in_dim");
  for (const auto& s : sigmas_full) {
    require(s.dim() == rho_full.dim(), ErrorKind::DimensionMismatch, "sigma dimension mismatch");
    require(support_contained(s, rho_full), ErrorKind::SupportViolation, "supp sigma is not contained in supp rho");
  }
  ReversibilityReport rep;
  rep.standing.positivity = positivity_report(t_full, opt.samples, opt.seed);
  if (!rep.standing.positivity.trace_preserving) rep.notes.push_back("T is not trace preserving");
  if (!rep.standing.positivity.schwarz_sampled) rep.notes.push_back("T* violated the Schwarz inequality on a sample");

  const DensityOperator image_full = DensityOperator::normalized(t_full.apply(rho_full.matrix()));
  rep.standing.rho_invertible = rho_full.invertible();
  rep.standing.image_invertible = image_full.invertible();

  // Working instance: compressed to the supports when needed.
  Channel t = t_full;
  std::optional<Compression> comp;
  auto compress_state = [&](const DensityOperator& s) {
    return DensityOperator::normalized(Matrix(comp->v.adjoint() * s.matrix() * comp->v));
  };
  std::optional<DensityOperator> rho_c;
  std::vector<DensityOperator> sigmas;
  if (!rep.standing.rho_invertible || !rep.standing.image_invertible) {
    comp = restrict_to_support(t_full, rho_full);
    t = comp->compressed;
    rep.standing.compressed = true;
    rep.notes.push_back("compressed to supp rho -> supp T(rho)");
    rho_c = compress_state(rho_full);
    for (const auto& s : sigmas_full) sigmas.push_back(compress_state(s));
  } else {
    rho_c = rho_full;
    sigmas = sigmas_full;
  }
  const DensityOperator& rho = *rho_c;
  rep.standing.working_in_dim = t.in_dim();
  rep.standing.working_out_dim = t.out_dim();

  const DensityOperator image = DensityOperator::normalized(t.apply(rho.matrix()));
  const Channel adj = t.adjoint();
  const Channel recovery = petz_recovery(t, rho);
  const Channel dual = recovery.adjoint();
  rep.recovery = comp ? extend_recovery(recovery, *comp, rho_full) : recovery;

  const SchwarzCheck dual_schwarz = sampled_schwarz(dual, opt.samples, opt.seed + 1);
  rep.standing.petz_dual_schwarz_sampled = dual_schwarz.holds;
  rep.standing.petz_dual_schwarz_worst = dual_schwarz.worst_violation;
  if (!dual_schwarz.holds) rep.notes.push_back("T_rho violated the Schwarz inequality on a sample");

  std::optional<FixedPointAlgebra> fixed;
  try {
    fixed = fixed_point_algebra(compose(adj, dual));
    rep.diagnostics.fixed_point_dim = fixed->algebra.size();
  } catch (const Error& e) {
    rep.notes.push_back(std::string("fixed-point algebra unavailable: ") + e.what());
  }

  // Generators for the multiplicative-domain diagnostic.
  std::optional<AlgebraBasis> md_algebra;
  try {
    const FixedPointAlgebra ft = fixed_point_algebra(compose(dual, adj));
    rep.diagnostics.fixed_point_tilde_dim = ft.algebra.size();
    std::vector<Matrix> gens;
    for (const auto& b : ft.algebra.basis())
      if (multiplicative_domain_membership(adj, b).member) gens.push_back(adj.apply(b));
    md_algebra = generated_algebra(gens, t.in_dim());
    rep.diagnostics.multiplicative_domain_evaluated = true;
  } catch (const Error& e) {
    rep.notes.push_back(std::string("multiplicative-domain diagnostic unavailable: ") + e.what());
  }

  std::vector<double> r_grid = opt.hoeffding_r;
  if (opt.s0) {
    double r0 = kInfinity;
    for (const auto& s : *opt.s0) {
      require(s.dim() == rho_full.dim(), ErrorKind::DimensionMismatch, "S_0 state dimension mismatch");
      const Matrix mix = s.invertible() ? s.matrix()
                                        : Matrix(opt.r0_epsilon * rho_full.matrix() + (1.0 - opt.r0_epsilon) * s.matrix());
      r0 = std::min(r0, relative_entropy(image_full, DensityOperator::normalized(t_full.apply(mix))));
    }
    rep.diagnostics.r0 = r0;
    if (std::isfinite(r0) && r0 > 0) r_grid.push_back(0.5 * r0);
  }

  const std::size_t n = sigmas.size();
  std::vector<detail::SigmaResult> results(n);
  const Matrix rho_inv_sqrt = rho.power(-0.5);
  detail::parallel_for(n, detail::thread_count(opt.threads), [&](std::size_t k) {
    auto& res = results[k];
    const DensityOperator& sigma = sigmas[k];
    const DensityOperator image_sigma = DensityOperator::normalized(t.apply(sigma.matrix()));

    // C1 on the full space with the (possibly extended) recovery map.
    const Matrix full_image = t_full.apply(sigmas_full[k].matrix());
    const double c1 = trace_norm(Matrix(rep.recovery.apply(full_image) - sigmas_full[k].matrix()));
    detail::note_max(res, 0, c1, c1);

    const double s_in = relative_entropy(sigma, rho);
    const double s_out = relative_entropy(image_sigma, image);
    detail::note_max(res, 1, std::abs(s_in - s_out), detail::scaled_gap(s_in, s_out));

    for (double tt : opt.t_grid) {
      const Matrix lhs = adj.apply(Matrix(image_sigma.imag_power(tt) * image.imag_power(-tt)));
      const Matrix rhs = sigma.imag_power(tt) * rho.imag_power(-tt);
      const double r = (lhs - rhs).norm();
      detail::note_max(res, 2, r, r);
    }

    for (double s : opt.power_s) {
      const double a = power_trace(sigma, rho, s);
      const double b = power_trace(image_sigma, image, s);
      detail::note_max(res, 3, std::abs(a - b), std::abs(a - b));
    }

    const RNDerivative d = rn_derivative(sigma, rho);
    const RNDerivative d_out = rn_derivative(image_sigma, image);
    const double c5 = (adj.apply(d_out.matrix) - d.matrix).norm();
    detail::note_max(res, 4, c5, c5 / std::max(1.0, d.norm));
    if (fixed) {
      const double c6 = fixed->algebra.residual(d.matrix);
      detail::note_max(res, 5, c6, c6 / std::max(1.0, d.matrix.norm()));
    }
    res.functoriality = (d_out.matrix - dual.apply(d.matrix)).norm();
    res.petz_independence = detail::petz_independence(t, sigma, image_sigma, dual);
    if (md_algebra)
      for (double tt : opt.t_grid) {
        const Matrix u = rho.imag_power(tt);
        res.mult_domain = std::max(res.mult_domain, md_algebra->residual(u * d.matrix * u.adjoint()));
      }

    for (const auto& member : extended_family({sigma}, rho, opt.family_s_grid)) {
      const L1FamilyResult r = l1_equality_family(t, member, rho);
      detail::note_max(res, 6, std::max(std::abs(r.max_gap), std::abs(r.min_gap)), detail::l1_relative(r));
    }
    {
      const L1FamilyResult r = l1_equality_family(t, sigma, rho);
      detail::note_max(res, 7, std::max(std::abs(r.max_gap), std::abs(r.min_gap)), detail::l1_relative(r));
      // The extended family includes sigma itself.
      detail::note_max(res, 6, std::max(std::abs(r.max_gap), std::abs(r.min_gap)), detail::l1_relative(r));
    }
    for (int copies = 2; copies <= opt.n_max; ++copies) {
      const L1FamilyResult r = l1_equality_family(t, sigma, rho, {}, copies, opt.size_cap);
      detail::note_max(res, 8, std::max(std::abs(r.max_gap), std::abs(r.min_gap)), detail::l1_relative(r));
    }

    const DensityOperator mid(hermitian_part(0.5 * (sigma.matrix() + rho.matrix())));
    const DensityOperator mid_image(hermitian_part(0.5 * (image_sigma.matrix() + image.matrix())));
    for (const auto& [a, b] : {std::pair{&sigma, &image_sigma}, std::pair{&mid, &mid_image}}) {
      const double ca = chernoff(*a, rho).value;
      const double cb = chernoff(*b, image).value;
      detail::note_max(res, 9, std::isinf(ca) && ca == cb ? 0.0 : std::abs(ca - cb), detail::scaled_gap(ca, cb));
    }
    for (double r : r_grid) {
      const double ha = hoeffding(sigma, rho, r);
      const double hb = hoeffding(image_sigma, image, r);
      detail::note_max(res, 10, std::isinf(ha) && ha == hb ? 0.0 : std::abs(ha - hb), detail::scaled_gap(ha, hb));
    }
  });

  for (int k = 0; k < detail::kConditionCount; ++k) {
    ConditionResult c;
    c.id = detail::kConditionIds[k];
    c.description = detail::kConditionText[k];
    for (const auto& r : results) {
      c.residual = std::max(c.residual, r.raw[k]);
      c.relative = std::max(c.relative, r.rel[k]);
      c.per_sigma.push_back(r.raw[k]);
    }
    rep.conditions.push_back(std::move(c));
  }
  for (const auto& r : results) {
    rep.diagnostics.functoriality = std::max(rep.diagnostics.functoriality, r.functoriality);
    rep.diagnostics.petz_independence = std::max(rep.diagnostics.petz_independence, r.petz_independence);
    rep.diagnostics.multiplicative_domain = std::max(rep.diagnostics.multiplicative_domain, r.mult_domain);
  }
  if (!fixed) rep.conditions[5].evaluated = false;

  // C11: metric gaps on an orthonormal basis of Lin(S), plus chi^2 per sigma.
  auto& c11 = rep.conditions[11];
  if (opt.include_fisher) {
    std::vector<Matrix> diffs;
    for (const auto& s : sigmas) diffs.push_back(s.matrix() - rho.matrix());
    const auto lin = AlgebraBasis::span(diffs, rho.dim(), 1e-10).basis();
    const std::vector<MonotoneFunction> metrics = {fisher_catalog::bures(), fisher_catalog::kubo_mori(),
                                                   fisher_catalog::rld(),
                                                   fisher_catalog::rich(t.in_dim(), t.out_dim())};
    std::vector<double> per_sigma(n, 0.0);
    for (const auto& f : metrics) {
      for (const auto& x0 : lin) {
        const Matrix x = hermitian_part(x0);
        const Matrix tx = t.apply(x);
        const double a = fisher_metric(rho, f, x, x);
        const double b = fisher_metric(image, f, tx, tx);
        c11.residual = std::max(c11.residual, std::abs(a - b));
        c11.relative = std::max(c11.relative, detail::scaled_gap(a, b));
      }
      for (std::size_t k = 0; k < n; ++k) {
        const DensityOperator image_sigma = DensityOperator::normalized(t.apply(sigmas[k].matrix()));
        const double a = chi2_divergence(sigmas[k], rho, f);
        const double b = chi2_divergence(image_sigma, image, f);
        per_sigma[k] = std::max(per_sigma[k], std::abs(a - b));
        c11.residual = std::max(c11.residual, std::abs(a - b));
        c11.relative = std::max(c11.relative, detail::scaled_gap(a, b));
      }
    }
    c11.per_sigma = per_sigma;
  } else {
    c11.evaluated = false;
    c11.per_sigma.assign(n, 0.0);
  }

  for (auto& c : rep.conditions)
    c.verdict = c.evaluated ? detail::classify(c.relative, opt.hold_rel, opt.fail_rel) : Verdict::Inconclusive;
  rep.overall = rep.conditions[0].verdict;

  bool any_fail = false;
  bool core_fail = false;
  for (std::size_t k = 1; k < rep.conditions.size(); ++k) {
    if (rep.conditions[k].verdict != Verdict::Fails) continue;
    any_fail = true;
    if (k <= 5) core_fail = true;
  }
  if (rep.overall == Verdict::Holds && any_fail) {
    rep.consistent = false;
    rep.notes.push_back("recovery holds but another condition fails");
  }
  if (rep.overall == Verdict::Fails && !core_fail) {
    rep.consistent = false;
    rep.notes.push_back("recovery fails but none of C2..C6 fails");
  }

  if (rep.overall == Verdict::Holds) {
    try {
      rep.factorization = factorize(t, rho, sigmas, std::max(1e-8, rep.conditions[0].residual * 10));
    } catch (const Error& e) {
      rep.notes.push_back(std::string("factorization unavailable: ") + e.what());
    }
  }
  return rep;
}

}  // namespace chanrev
