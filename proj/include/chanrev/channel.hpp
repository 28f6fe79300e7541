#pragma once

// Linear maps between matrix spaces in Kraus, Choi and superoperator form,
// the positivity hierarchy, and the Petz dual / recovery construction.

#include "chanrev/linalg.hpp"
#include "chanrev/random.hpp"
#include "chanrev/state.hpp"

#include <optional>
#include <utility>

namespace chanrev {

enum class Representation { Kraus, Choi, Super };

inline std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::Kraus: return "kraus";
    case Representation::Choi: return "choi";
    case Representation::Super: return "super";
  }
  return "super";
}

/// Linear map M_in -> M_out. The canonical form is the superoperator matrix
/// S (out^2 x in^2) with vec(T(X)) = S vec(X) for column-stacking vec. Kraus
/// operators are kept when the map was built from them.
class Channel {
 public:
  Channel() = default;

  static Channel from_super(Matrix s, Eigen::Index in_dim, Eigen::Index out_dim) {
    require(in_dim > 0 && out_dim > 0, ErrorKind::InvalidArgument, "channel dimensions must be positive");
    require(s.rows() == out_dim * out_dim && s.cols() == in_dim * in_dim, ErrorKind::DimensionMismatch,
            "superoperator must be out^2 x in^2");
    require_finite(s, "superoperator");
    Channel c;
    c.in_ = in_dim;
    c.out_ = out_dim;
    c.super_ = std::move(s);
    c.rep_ = Representation::Super;
    return c;
  }

  static Channel from_kraus(std::vector<Matrix> ks) {
    require(!ks.empty(), ErrorKind::InvalidArgument, "Kraus list is empty");
    const Eigen::Index out = ks.front().rows();
    const Eigen::Index in = ks.front().cols();
    Matrix s = Matrix::Zero(out * out, in * in);
    for (const auto& k : ks) {
      require(k.rows() == out && k.cols() == in, ErrorKind::DimensionMismatch,
              "Kraus operators must share one shape");
      require_finite(k, "Kraus operator");
      s += kron(k.conjugate(), k);
    }
    Channel c = from_super(std::move(s), in, out);
    c.kraus_ = std::move(ks);
    c.rep_ = Representation::Kraus;
    return c;
  }

  /// Choi matrix J = sum_ij E_ij (x) T(E_ij), i.e. J(i*out + a, j*out + b) = T(E_ij)(a, b).
  static Channel from_choi(const Matrix& j, Eigen::Index in_dim, Eigen::Index out_dim) {
    require(j.rows() == in_dim * out_dim && j.cols() == in_dim * out_dim, ErrorKind::DimensionMismatch,
            "Choi matrix must be (in*out) x (in*out)");
    Matrix s(out_dim * out_dim, in_dim * in_dim);
    for (Eigen::Index i = 0; i < in_dim; ++i)
      for (Eigen::Index k = 0; k < in_dim; ++k)
        s.col(k * in_dim + i) = vec(j.block(i * out_dim, k * out_dim, out_dim, out_dim));
    Channel c = from_super(std::move(s), in_dim, out_dim);
    c.rep_ = Representation::Choi;
    return c;
  }

  /// Builds the map from its action on matrix units.
  template <class F>
  static Channel from_function(F&& f, Eigen::Index in_dim, Eigen::Index out_dim) {
    Matrix s(out_dim * out_dim, in_dim * in_dim);
    for (Eigen::Index k = 0; k < in_dim; ++k)
      for (Eigen::Index i = 0; i < in_dim; ++i) {
        Matrix e = Matrix::Zero(in_dim, in_dim);
        e(i, k) = 1.0;
        const Matrix image = f(e);
        require(image.rows() == out_dim && image.cols() == out_dim, ErrorKind::DimensionMismatch,
                "function image has the wrong shape");
        s.col(k * in_dim + i) = vec(image);
      }
    return from_super(std::move(s), in_dim, out_dim);
  }

  static Channel identity(Eigen::Index d) { return from_kraus({chanrev::identity(d)}); }

  /// X -> U X U*.
  static Channel unitary(const Matrix& u) { return from_kraus({u}); }

  static Channel transpose(Eigen::Index d) {
    return from_function([](const Matrix& x) -> Matrix { return x.transpose(); }, d, d);
  }

  /// X -> sum_k P_k X P_k for orthogonal projections summing to I.
  static Channel pinching(const std::vector<Matrix>& projections) {
    return from_kraus(projections);
  }

  /// X -> X (x) omega.
  static Channel append_ancilla(const Matrix& omega, Eigen::Index d) {
    require_square(omega, "ancilla state");
    return from_function([&](const Matrix& x) { return kron(x, omega); }, d, d * omega.rows());
  }

  /// Partial trace over the second factor of C^d1 (x) C^d2.
  static Channel partial_trace_second(Eigen::Index d1, Eigen::Index d2) {
    std::vector<Matrix> ks;
    for (Eigen::Index k = 0; k < d2; ++k) {
      Matrix e = Matrix::Zero(1, d2);
      e(0, k) = 1.0;
      ks.push_back(kron(chanrev::identity(d1), e));
    }
    return from_kraus(std::move(ks));
  }

  Eigen::Index in_dim() const { return in_; }
  Eigen::Index out_dim() const { return out_; }
  Representation representation() const { return rep_; }
  const Matrix& super() const { return super_; }
  const std::optional<std::vector<Matrix>>& kraus_operators() const { return kraus_; }

  Matrix apply(const Matrix& x) const {
    require(x.rows() == in_ && x.cols() == in_, ErrorKind::DimensionMismatch,
            "channel input must be " + std::to_string(in_) + "x" + std::to_string(in_));
    if (kraus_) {
      Matrix out = Matrix::Zero(out_, out_);
      for (const auto& k : *kraus_) out.noalias() += k * x * k.adjoint();
      return out;
    }
    return apply_super(x);
  }

  Matrix apply_super(const Matrix& x) const {
    require(x.rows() == in_ && x.cols() == in_, ErrorKind::DimensionMismatch, "channel input has wrong shape");
    return unvec(super_ * vec(x), out_, out_);
  }

  Matrix operator()(const Matrix& x) const { return apply(x); }

  DensityOperator apply(const DensityOperator& rho) const {
    return DensityOperator::normalized(apply(rho.matrix()));
  }

  /// Hilbert-Schmidt adjoint: superoperator S*, Kraus {K_i*}.
  Channel adjoint() const {
    Channel c = from_super(super_.adjoint(), out_, in_);
    if (kraus_) {
      std::vector<Matrix> ks;
      for (const auto& k : *kraus_) ks.push_back(k.adjoint());
      c.kraus_ = std::move(ks);
      c.rep_ = Representation::Kraus;
    }
    return c;
  }

  Matrix choi() const {
    Matrix j(in_ * out_, in_ * out_);
    for (Eigen::Index i = 0; i < in_; ++i)
      for (Eigen::Index k = 0; k < in_; ++k)
        j.block(i * out_, k * out_, out_, out_) = unvec(super_.col(k * in_ + i), out_, out_);
    return j;
  }

  /// Kraus operators from the Choi eigendecomposition, K(a, i) = sqrt(l) v(i*out + a).
  std::vector<Matrix> kraus(double atol = defaults::atol) const {
    if (kraus_) return *kraus_;
    const Matrix j = choi();
    const EigenPairs pairs = eigh(j, kInfinity);
    const double scale = std::max(1.0, pairs.values.cwiseAbs().maxCoeff());
    require(pairs.values(0) >= -atol * scale, ErrorKind::NotPositive, "map is not completely positive");
    std::vector<Matrix> ks;
    const double threshold = defaults::cutoff * scale;
    for (Eigen::Index n = pairs.values.size() - 1; n >= 0; --n) {
      if (pairs.values(n) <= threshold) break;
      const Vector v = std::sqrt(pairs.values(n)) * pairs.vectors.col(n);
      ks.push_back(Eigen::Map<const Matrix>(v.data(), out_, in_));
    }
    if (ks.empty()) ks.push_back(Matrix::Zero(out_, in_));
    return ks;
  }

  /// max |T*(I) - I|.
  double trace_preserving_residual() const {
    const Matrix adj_unit = unvec(super_.adjoint() * vec(chanrev::identity(out_)), in_, in_);
    return (adj_unit - chanrev::identity(in_)).cwiseAbs().maxCoeff();
  }

  /// Trace preservation read off the Choi matrix: Tr_out J = I.
  bool trace_preserving(double atol = defaults::atol) const {
    const Matrix j = choi();
    Matrix partial = Matrix::Zero(in_, in_);
    for (Eigen::Index i = 0; i < in_; ++i)
      for (Eigen::Index k = 0; k < in_; ++k) partial(i, k) = j.block(i * out_, k * out_, out_, out_).trace();
    // Tr_out J is the transpose of T*(I); compare entrywise against I.
    return (partial - chanrev::identity(in_)).cwiseAbs().maxCoeff() <= atol * std::max<double>(1.0, in_);
  }

  bool adjoint_unital(double atol = defaults::atol) const {
    return trace_preserving_residual() <= atol * std::max<double>(1.0, in_);
  }

  /// Maps X in M_k (x) M_in to (id_k (x) T)(X).
  Matrix apply_ampliated(const Matrix& x, Eigen::Index k) const {
    require(x.rows() == k * in_ && x.cols() == k * in_, ErrorKind::DimensionMismatch,
            "ampliated input has the wrong shape");
    Matrix out(k * out_, k * out_);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b)
        out.block(a * out_, b * out_, out_, out_) = apply(Matrix(x.block(a * in_, b * in_, in_, in_)));
    return out;
  }

 private:
  Eigen::Index in_ = 0;
  Eigen::Index out_ = 0;
  Matrix super_;
  std::optional<std::vector<Matrix>> kraus_;
  Representation rep_ = Representation::Super;
};

/// outer o inner.
inline Channel compose(const Channel& outer, const Channel& inner) {
  require(outer.in_dim() == inner.out_dim(), ErrorKind::DimensionMismatch, "compose: dimension mismatch");
  if (outer.kraus_operators() && inner.kraus_operators()) {
    const auto& a = *outer.kraus_operators();
    const auto& b = *inner.kraus_operators();
    if (a.size() * b.size() <= 64) {
      std::vector<Matrix> ks;
      for (const auto& ka : a)
        for (const auto& kb : b) ks.push_back(ka * kb);
      return Channel::from_kraus(std::move(ks));
    }
  }
  return Channel::from_super(outer.super() * inner.super(), inner.in_dim(), outer.out_dim());
}

/// Conjugation X -> L X R* as a superoperator matrix.
inline Matrix conjugation_super(const Matrix& left, const Matrix& right) {
  return kron(right.conjugate(), left);
}

// ---------------------------------------------------------------------------
// Positivity hierarchy

struct PositivityReport {
  bool completely_positive = false;
  double choi_min_eigenvalue = 0.0;
  /// 2-positivity. Exact when two_positive_exact is set; otherwise "no
  /// violation found" by an alternating minimization over entangled inputs.
  bool two_positive = false;
  bool two_positive_exact = true;
  /// No negative output found on random pure-state inputs.
  bool positive_sampled = false;
  /// Sampled Schwarz inequality T*(a*a) >= T*(a)* T*(a) for the adjoint
  /// (Heisenberg-picture) map; only a violation is conclusive.
  bool schwarz_sampled = false;
  double schwarz_worst = 0.0;
  bool trace_preserving = false;
  bool adjoint_unital = false;
  /// T(rho) invertible for a random invertible rho, equivalently T* faithful.
  bool faithful_adjoint = false;
};

namespace detail {

inline double scaled_tol(double atol, const Matrix& m) {
  return atol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

inline Vector min_eigenvector(const Matrix& m, double* value) {
  const EigenPairs pairs = eigh(hermitian_part(m), kInfinity);
  *value = pairs.values(0);
  return pairs.vectors.col(0);
}

/// Minimizes y* (id_2 (x) T)(x x*) y over unit x, y by alternating exact
/// minimization in each variable. Returns the smallest value found.
inline double two_positivity_search(const Channel& t, Rng& rng, int restarts, int iterations) {
  const Channel adj = t.adjoint();
  double best = kInfinity;
  for (int r = 0; r < restarts; ++r) {
    Vector x = random_unit_vector(2 * t.in_dim(), rng);
    double value = 0.0;
    for (int it = 0; it < iterations; ++it) {
      const Vector y = min_eigenvector(t.apply_ampliated(x * x.adjoint(), 2), &value);
      const Vector x_next = min_eigenvector(adj.apply_ampliated(y * y.adjoint(), 2), &value);
      x = x_next;
      best = std::min(best, value);
      if (best < -1e-6) return best;
    }
  }
  return best;
}

/// Samples m(a* a) >= m(a)* m(a) over Ginibre a. Returns (no violation, worst eigenvalue).
inline std::pair<bool, double> schwarz_search(const Channel& m, int samples, Rng& rng, double atol) {
  bool ok = true;
  double worst_seen = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Matrix a = ginibre(m.in_dim(), m.in_dim(), rng);
    const Matrix ma = m.apply(a);
    const Matrix gap = m.apply(Matrix(a.adjoint() * a)) - ma.adjoint() * ma;
    const double worst = min_eigenvalue(hermitian_part(gap), kInfinity);
    worst_seen = std::min(worst_seen, worst);
    if (worst < -scaled_tol(atol, gap) * 10) ok = false;
  }
  return {ok, worst_seen};
}

}  // namespace detail

struct SchwarzCheck {
  bool holds = true;
  /// Smallest eigenvalue of T(a* c^-1 a) - T(a)* T(c)^-1 T(a) seen (0 if none negative).
  double worst_violation = 0.0;
};

/// Sampled Schwarz inequality m(a* a) >= m(a)* m(a); only a violation is conclusive.
inline SchwarzCheck sampled_schwarz(const Channel& m, int samples = 100, std::uint64_t seed = 0,
                                    double atol = defaults::atol) {
  Rng rng(seed);
  const auto [ok, worst] = detail::schwarz_search(m, samples, rng, atol);
  return {ok, worst};
}

inline PositivityReport positivity_report(const Channel& t, int samples = 100, std::uint64_t seed = 0,
                                          double atol = defaults::atol) {
  require(samples >= 1, ErrorKind::InvalidArgument, "samples must be >= 1");
  Rng rng(seed);
  PositivityReport rep;
  const Matrix j = t.choi();
  rep.choi_min_eigenvalue = min_eigenvalue(j, kInfinity);
  rep.completely_positive = rep.choi_min_eigenvalue >= -detail::scaled_tol(atol, j);

  if (rep.completely_positive) {
    rep.two_positive = true;
    rep.two_positive_exact = true;
  } else if (std::min(t.in_dim(), t.out_dim()) <= 2) {
    // k-positivity with k = min(in, out) already implies complete positivity.
    rep.two_positive = false;
    rep.two_positive_exact = true;
  } else {
    const double found = detail::two_positivity_search(t, rng, 12, 40);
    rep.two_positive = found >= -atol;
    rep.two_positive_exact = !rep.two_positive;
  }

  rep.positive_sampled = true;
  for (int s = 0; s < samples && !rep.completely_positive; ++s) {
    const Vector psi = random_unit_vector(t.in_dim(), rng);
    const Matrix image = t.apply(Matrix(psi * psi.adjoint()));
    if (min_eigenvalue(hermitian_part(image), kInfinity) < -detail::scaled_tol(atol, image)) {
      rep.positive_sampled = false;
      break;
    }
  }

  const auto schwarz = detail::schwarz_search(t.adjoint(), samples, rng, atol);
  rep.schwarz_sampled = schwarz.first;
  rep.schwarz_worst = schwarz.second;

  rep.trace_preserving = t.trace_preserving(atol);
  rep.adjoint_unital = t.adjoint_unital(atol);

  const Matrix probe = random_density_matrix(t.in_dim(), rng);
  const Matrix image = hermitian_part(t.apply(probe));
  const EigenPairs ip = eigh(image, kInfinity);
  const double top = std::max(ip.values.cwiseAbs().maxCoeff(), 1e-300);
  rep.faithful_adjoint = ip.values(0) > defaults::cutoff * top;
  return rep;
}

/// Samples the generalized Schwarz inequality T(a* c^-1 a) >= T(a)* T(c)^-1 T(a).
inline SchwarzCheck generalized_schwarz_check(const Channel& t, const Matrix& c, int samples = 100,
                                              std::uint64_t seed = 0, double atol = defaults::atol) {
  require(c.rows() == t.in_dim() && c.cols() == t.in_dim(), ErrorKind::DimensionMismatch,
          "c must be in_dim x in_dim");
  const EigenPairs cp = eigh(c, atol);
  const double top = std::max(cp.values.cwiseAbs().maxCoeff(), 1e-300);
  require(cp.values(0) > defaults::cutoff * top, ErrorKind::NotInvertible, "c must be positive invertible");
  const Matrix c_inv = psd_power(cp, -1.0);
  const Matrix tc_inv = generalized_inverse(hermitian_part(t.apply(c)), defaults::cutoff, kInfinity);
  Rng rng(seed);
  SchwarzCheck out;
  for (int s = 0; s < samples; ++s) {
    const Matrix a = ginibre(t.in_dim(), t.in_dim(), rng);
    const Matrix ta = t.apply(a);
    const Matrix gap = t.apply(Matrix(a.adjoint() * c_inv * a)) - ta.adjoint() * tc_inv * ta;
    const double worst = min_eigenvalue(hermitian_part(gap), kInfinity);
    out.worst_violation = std::min(out.worst_violation, worst);
    if (worst < -detail::scaled_tol(atol, gap) * 10) out.holds = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Petz dual and recovery

/// Petz recovery T_rho*(b) = rho^1/2 T*(T(rho)^-1/2 b T(rho)^-1/2) rho^1/2.
/// If T(rho) is singular, inverse powers act on its support and the recovery
/// is extended by b -> Tr(b (I - p0)) rho with p0 = supp T(rho), which keeps
/// it trace preserving. strict = true raises NotInvertible instead.
inline Channel petz_recovery(const Channel& t, const DensityOperator& rho, bool strict = false) {
  require(rho.dim() == t.in_dim(), ErrorKind::DimensionMismatch, "rho dimension must equal in_dim");
  const EigenPairs image_pairs = eigh(hermitian_part(t.apply(rho.matrix())), kInfinity);
  detail::require_psd(image_pairs, 1e-8, "T(rho)");
  const SupportProjection image_support = detail::support_from_pairs(image_pairs, defaults::cutoff);
  if (strict) {
    require(image_support.full(), ErrorKind::NotInvertible, "T(rho) is not invertible");
    rho.require_invertible("rho");
  }
  const Matrix img_inv_sqrt = psd_power(image_pairs, -0.5);
  const Matrix rho_sqrt = rho.power(0.5);
  const Matrix adj = t.super().adjoint();
  Matrix s = conjugation_super(rho_sqrt, rho_sqrt) * adj * conjugation_super(img_inv_sqrt, img_inv_sqrt);
  if (!image_support.full()) {
    const Matrix off = chanrev::identity(t.out_dim()) - image_support.projection;
    // b -> Tr(b off) rho has superoperator vec(rho) vec(off^T)^T.
    s += vec(rho.matrix()) * vec(Matrix(off.transpose())).transpose();
  }
  if (t.kraus_operators() && image_support.full()) {
    std::vector<Matrix> ks;
    for (const auto& k : *t.kraus_operators()) ks.push_back(rho_sqrt * k.adjoint() * img_inv_sqrt);
    return Channel::from_kraus(std::move(ks));
  }
  return Channel::from_super(std::move(s), t.out_dim(), t.in_dim());
}

/// Petz dual T_rho(b) = T(rho)^-1/2 T(rho^1/2 b rho^1/2) T(rho)^-1/2, the
/// adjoint of the recovery map.
inline Channel petz_dual(const Channel& t, const DensityOperator& rho, bool strict = false) {
  return petz_recovery(t, rho, strict).adjoint();
}

/// Compression of T to p A p -> p0 B p0, p = supp rho, p0 = supp T(rho),
/// written in orthonormal bases V (of range p) and W (of range p0):
/// compressed(x) = W* T(V x V*) W.
struct Compression {
  Channel compressed;
  Matrix v;
  Matrix w;
};

inline Compression restrict_to_support(const Channel& t, const DensityOperator& rho) {
  Compression c;
  c.v = rho.support().basis;
  c.w = support_projection(hermitian_part(t.apply(rho.matrix())), defaults::cutoff, 1e-8).basis;
  const Matrix v = c.v;
  const Matrix w = c.w;
  c.compressed = Channel::from_function(
      [&](const Matrix& x) -> Matrix { return w.adjoint() * t.apply(Matrix(v * x * v.adjoint())) * w; },
      v.cols(), w.cols());
  return c;
}

/// Rebuilds a full-space map from a recovery S~ of the compression:
/// S(b) = V S~(W* b W) V* + Tr(b (I - W W*)) rho.
inline Channel extend_recovery(const Channel& compressed_recovery, const Compression& c,
                               const DensityOperator& rho) {
  const Eigen::Index out = c.w.rows();
  const Eigen::Index in = c.v.rows();
  const Matrix off = chanrev::identity(out) - c.w * c.w.adjoint();
  return Channel::from_function(
      [&](const Matrix& b) -> Matrix {
        const Matrix inner = compressed_recovery.apply(Matrix(c.w.adjoint() * b * c.w));
        return c.v * inner * c.v.adjoint() + (b * off).trace() * rho.matrix();
      },
      out, in);
}

}  // namespace chanrev
