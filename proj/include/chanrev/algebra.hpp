#pragma once

// *-subalgebras of M_d: generated algebras, commutants, block structure,
// trace-preserving conditional expectations and modular invariance.

#include "chanrev/channel.hpp"
#include "chanrev/linalg.hpp"
#include "chanrev/random.hpp"
#include "chanrev/state.hpp"

#include <cmath>
#include <numbers>

namespace chanrev {

/// Subspace of M_d with an HS-orthonormal basis, stored as the columns of a
/// d^2 x k matrix of vectorized elements.
class AlgebraBasis {
 public:
  AlgebraBasis() = default;
  explicit AlgebraBasis(Eigen::Index ambient_dim)
      : d_(ambient_dim), q_(Matrix::Zero(ambient_dim * ambient_dim, 0)) {}

  static AlgebraBasis full(Eigen::Index d) {
    AlgebraBasis a(d);
    a.q_ = Matrix::Identity(d * d, d * d);
    return a;
  }

  static AlgebraBasis scalars(Eigen::Index d) {
    AlgebraBasis a(d);
    a.add(identity(d));
    return a;
  }

  static AlgebraBasis diagonal(Eigen::Index d) {
    AlgebraBasis a(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      Matrix e = Matrix::Zero(d, d);
      e(i, i) = 1.0;
      a.add(e);
    }
    return a;
  }

  /// Span of the given elements (not closed under anything).
  static AlgebraBasis span(const std::vector<Matrix>& elements, Eigen::Index d,
                           double rel_tol = defaults::membership_rel) {
    AlgebraBasis a(d);
    for (const auto& x : elements) a.add(x, rel_tol);
    return a;
  }

  /// Adds x if its residual against the current span exceeds rel_tol * ||x||.
  bool add(const Matrix& x, double rel_tol = defaults::membership_rel) {
    require(x.rows() == d_ && x.cols() == d_, ErrorKind::DimensionMismatch, "algebra element has wrong shape");
    const Vector v = vec(x);
    const double norm = v.norm();
    if (norm == 0.0) return false;
    Vector r = v - q_ * (q_.adjoint() * v);
    r -= q_ * (q_.adjoint() * r);
    const double rn = r.norm();
    if (rn <= rel_tol * norm) return false;
    q_.conservativeResize(Eigen::NoChange, q_.cols() + 1);
    q_.col(q_.cols() - 1) = r / rn;
    return true;
  }

  Eigen::Index ambient_dim() const { return d_; }
  Eigen::Index size() const { return q_.cols(); }
  const Matrix& stacked() const { return q_; }

  Matrix element(Eigen::Index i) const { return unvec(q_.col(i), d_, d_); }

  std::vector<Matrix> basis() const {
    std::vector<Matrix> out;
    for (Eigen::Index i = 0; i < size(); ++i) out.push_back(element(i));
    return out;
  }

  /// HS-orthogonal projection onto the span.
  Matrix project(const Matrix& x) const {
    if (size() == 0) return Matrix::Zero(d_, d_);
    return unvec(q_ * (q_.adjoint() * vec(x)), d_, d_);
  }

  /// ||x - project(x)||_2.
  double residual(const Matrix& x) const { return (x - project(x)).norm(); }

  bool contains(const Matrix& x, double rel_tol = defaults::membership_rel) const {
    return residual(x) <= rel_tol * std::max(x.norm(), 1e-300);
  }

  bool contains_identity(double rel_tol = defaults::membership_rel) const {
    return contains(identity(d_), rel_tol);
  }

  /// Subspace equality by mutual containment of bases.
  bool same_span(const AlgebraBasis& other, double rel_tol = 1e-8) const {
    if (size() != other.size()) return false;
    for (Eigen::Index i = 0; i < other.size(); ++i)
      if (!contains(other.element(i), rel_tol)) return false;
    return true;
  }

  /// Largest violation of *-closure and product closure over basis elements.
  double closure_residual() const {
    double worst = 0.0;
    const auto b = basis();
    for (std::size_t i = 0; i < b.size(); ++i) {
      worst = std::max(worst, residual(b[i].adjoint()));
      for (std::size_t j = 0; j < b.size(); ++j) worst = std::max(worst, residual(b[i] * b[j]));
    }
    return worst;
  }

 private:
  Eigen::Index d_ = 0;
  Matrix q_;
};

/// Smallest unital *-subalgebra containing the generators.
inline AlgebraBasis generated_algebra(const std::vector<Matrix>& gens, Eigen::Index ambient_dim) {
  AlgebraBasis alg(ambient_dim);
  alg.add(identity(ambient_dim));
  for (const auto& g : gens) {
    require(g.rows() == ambient_dim && g.cols() == ambient_dim, ErrorKind::DimensionMismatch,
            "generator has wrong shape");
    alg.add(g);
    alg.add(g.adjoint());
  }
  const Eigen::Index cap = 2 * ambient_dim * ambient_dim;
  Eigen::Index done = 0;  // products among the first `done` elements are already in
  for (Eigen::Index round = 0; round < cap; ++round) {
    const Eigen::Index before = alg.size();
    if (before == done) return alg;
    const auto b = alg.basis();
    for (Eigen::Index i = 0; i < before; ++i)
      for (Eigen::Index j = 0; j < before; ++j) {
        if (i < done && j < done) continue;
        alg.add(b[i] * b[j]);
      }
    for (Eigen::Index i = done; i < before; ++i) alg.add(b[i].adjoint());
    done = before;
    if (alg.size() == ambient_dim * ambient_dim) return alg;
  }
  throw Error(ErrorKind::ClosureNotReached, "algebra dimension still growing after " + std::to_string(cap) + " rounds");
}

/// {x in within : x b = b x for every basis element b of alg}.
inline AlgebraBasis commutant(const AlgebraBasis& alg, const AlgebraBasis& within) {
  require(alg.ambient_dim() == within.ambient_dim(), ErrorKind::DimensionMismatch, "ambient dimensions differ");
  const Eigen::Index d = alg.ambient_dim();
  const Eigen::Index n = within.size();
  AlgebraBasis out(d);
  if (n == 0) return out;
  if (alg.size() == 0) return within;
  const auto a = alg.basis();
  const auto w = within.basis();
  Matrix m(static_cast<Eigen::Index>(a.size()) * d * d, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (std::size_t i = 0; i < a.size(); ++i)
      m.block(static_cast<Eigen::Index>(i) * d * d, k, d * d, 1) = vec(commutator(w[k], a[i]));
  const Matrix kernel = null_space(m, 1e-8);
  for (Eigen::Index c = 0; c < kernel.cols(); ++c) {
    Matrix x = Matrix::Zero(d, d);
    for (Eigen::Index k = 0; k < n; ++k) x += kernel(k, c) * w[k];
    out.add(x);
  }
  return out;
}

inline AlgebraBasis commutant(const AlgebraBasis& alg) {
  return commutant(alg, AlgebraBasis::full(alg.ambient_dim()));
}

inline AlgebraBasis center(const AlgebraBasis& alg) { return commutant(alg, alg); }

/// alg is unitarily equivalent to (+)_k M_{n_k} (x) I_{m_k}: U* a U is block
/// diagonal with block k equal to X_k (x) I_{m_k} (row index j * m_k + l).
/// Columns beyond sum n_k m_k span the kernel of the algebra's unit.
struct BlockStructure {
  Matrix unitary;
  std::vector<std::pair<int, int>> blocks;  // (n_k, m_k)

  Eigen::Index covered() const {
    Eigen::Index s = 0;
    for (auto [n, m] : blocks) s += static_cast<Eigen::Index>(n) * m;
    return s;
  }

  /// The n_k x n_k factors X_k of an element of the algebra.
  std::vector<Matrix> factors(const Matrix& a) const {
    const Matrix c = unitary.adjoint() * a * unitary;
    std::vector<Matrix> out;
    Eigen::Index offset = 0;
    for (auto [n, m] : blocks) {
      Matrix x = Matrix::Zero(n, n);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < m; ++l) x(j, k) += c(offset + j * m + l, offset + k * m + l);
      out.push_back(x / static_cast<double>(m));
      offset += static_cast<Eigen::Index>(n) * m;
    }
    return out;
  }

  /// U ((+)_k X_k (x) I_{m_k}) U*.
  Matrix assemble(const std::vector<Matrix>& xs) const {
    require(xs.size() == blocks.size(), ErrorKind::DimensionMismatch, "factor count mismatch");
    const Eigen::Index d = unitary.rows();
    Matrix c = Matrix::Zero(d, d);
    Eigen::Index offset = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto [n, m] = blocks[k];
      c.block(offset, offset, static_cast<Eigen::Index>(n) * m, static_cast<Eigen::Index>(n) * m) =
          kron(xs[k], identity(m));
      offset += static_cast<Eigen::Index>(n) * m;
    }
    return unitary * c * unitary.adjoint();
  }

  /// max over elements of ||U* a U - (+)_k X_k (x) I||.
  double residual(const AlgebraBasis& alg) const {
    double worst = 0.0;
    for (const auto& b : alg.basis()) worst = std::max(worst, (assemble(factors(b)) - b).norm());
    return worst;
  }
};

namespace detail {

/// Eigenprojections (as orthonormal column blocks inside `range`) of a
/// Hermitian operator compressed to the range of the isometry `range`.
inline std::vector<Matrix> eigenspaces_within(const Matrix& h, const Matrix& range, double rel_gap) {
  const Matrix compressed = hermitian_part(range.adjoint() * h * range);
  const EigenPairs pairs = eigh(compressed, kInfinity);
  const double scale = std::max(spectral_radius(pairs), 1e-300);
  const SpectralDecomposition spec = group_eigenpairs(pairs, rel_gap * scale);
  std::vector<Matrix> out;
  for (const auto& block : spec.eigenvectors) out.push_back(range * block);
  return out;
}

inline double min_gap(const Matrix& h, const Matrix& range) {
  const Matrix compressed = hermitian_part(range.adjoint() * h * range);
  const EigenPairs pairs = eigh(compressed, kInfinity);
  double gap = kInfinity;
  for (Eigen::Index i = 1; i < pairs.values.size(); ++i) gap = std::min(gap, pairs.values(i) - pairs.values(i - 1));
  return gap;
}

inline Matrix random_element(const std::vector<Matrix>& basis, Rng& rng, bool hermitian) {
  Matrix x = Matrix::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& b : basis) x += Complex(rng.normal(), rng.normal()) * b;
  return hermitian ? hermitian_part(x) : x;
}

}  // namespace detail

/// Block decomposition through the center's minimal projections and a
/// minimal projection plus partial isometries in each central block.
inline BlockStructure structure_decomposition(const AlgebraBasis& alg, std::uint64_t seed = 0x5eed) {
  require(alg.size() > 0, ErrorKind::InvalidArgument, "empty algebra");
  const Eigen::Index d = alg.ambient_dim();
  const auto basis = alg.basis();
  Matrix positive = Matrix::Zero(d, d);
  for (const auto& b : basis) positive += b * b.adjoint();
  const SupportProjection unit = support_projection(hermitian_part(positive), 1e-10, kInfinity);
  const Matrix unit_range = unit.basis;

  const AlgebraBasis z = center(alg);
  const auto zb = z.basis();
  Rng rng(seed);
  constexpr double kRelGap = 1e-6;

  std::vector<Matrix> central;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Matrix h = detail::random_element(zb, rng, true);
    central = detail::eigenspaces_within(h, unit_range, kRelGap);
    if (static_cast<Eigen::Index>(central.size()) == z.size()) break;
    central.clear();
  }
  require(!central.empty(), ErrorKind::NumericalDegeneracy,
          "could not separate minimal central projections (center dimension " + std::to_string(z.size()) + ")");

  BlockStructure out;
  std::vector<Matrix> columns;
  for (const auto& range : central) {
    const Matrix p = range * range.adjoint();
    AlgebraBasis compressed(d);
    std::vector<Matrix> block_basis;
    for (const auto& b : basis) {
      // Basis elements have unit norm; anything this small is rounding from another block.
      const Matrix pbp = p * b * p;
      if (pbp.norm() <= 1e-9) continue;
      if (compressed.add(pbp)) block_basis.push_back(compressed.element(compressed.size() - 1));
    }
    const Eigen::Index dim = compressed.size();
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
    require(static_cast<Eigen::Index>(n) * n == dim, ErrorKind::NumericalDegeneracy,
            "central block has non-square dimension " + std::to_string(dim));
    const int rank = static_cast<int>(range.cols());
    require(rank % n == 0, ErrorKind::NumericalDegeneracy, "block rank is not a multiple of n_k");
    const int m = rank / n;

    std::vector<Matrix> minimal;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const Matrix h = p * detail::random_element(block_basis, rng, true) * p;
      minimal = detail::eigenspaces_within(h, range, kRelGap);
      if (static_cast<int>(minimal.size()) == n) break;
      minimal.clear();
    }
    require(!minimal.empty(), ErrorKind::NumericalDegeneracy, "could not find minimal projections in a block");

    const Matrix e1 = minimal[0] * minimal[0].adjoint();
    const Matrix a = p * detail::random_element(block_basis, rng, false) * p;
    const Matrix& f = minimal[0];  // orthonormal basis of range(e1)
    for (int j = 0; j < n; ++j) {
      Matrix u = e1;
      if (j > 0) {
        const Matrix ej = minimal[j] * minimal[j].adjoint();
        const Matrix w = ej * a * e1;
        const double alpha2 = (w.adjoint() * w).trace().real() / m;
        require(alpha2 > 1e-20, ErrorKind::NumericalDegeneracy, "degenerate partial isometry");
        u = w / std::sqrt(alpha2);
      }
      for (int l = 0; l < m; ++l) columns.push_back(u * f.col(l));
    }
    out.blocks.emplace_back(n, m);
  }

  Matrix u(d, d);
  Eigen::Index c = 0;
  for (const auto& col : columns) u.col(c++) = col;
  if (c < d) {
    const SupportProjection rest =
        support_projection(identity(d) - unit.projection, 1e-10, kInfinity);
    u.rightCols(d - c) = rest.basis;
  }
  out.unitary = u;
  const double unitarity = (u.adjoint() * u - identity(d)).norm();
  require(unitarity <= 1e-8, ErrorKind::NumericalDegeneracy, "block unitary is not unitary");
  require(out.residual(alg) <= 1e-8 * std::sqrt(static_cast<double>(alg.size())), ErrorKind::NumericalDegeneracy,
          "conjugated basis does not have the block shape");
  return out;
}

/// Trace-preserving conditional expectation: the HS-orthogonal projection onto span(alg).
inline Channel trace_conditional_expectation(const AlgebraBasis& alg) {
  const Eigen::Index d = alg.ambient_dim();
  return Channel::from_super(alg.stacked() * alg.stacked().adjoint(), d, d);
}

inline std::vector<double> default_t_grid() {
  const double base[] = {0.25, 0.5, 1.0, 2.0, std::numbers::e, std::numbers::pi};
  std::vector<double> out;
  for (double t : base) {
    out.push_back(-t);
    out.push_back(t);
  }
  return out;
}

struct ModularCheck {
  bool holds = true;
  double max_residual = 0.0;
};

/// Distance of rho^{it} b rho^{-it} to span(alg) over the grid and basis.
inline ModularCheck modular_invariance_check(const DensityOperator& rho, const AlgebraBasis& alg,
                                             const std::vector<double>& t_grid = default_t_grid(),
                                             double rel_tol = defaults::membership_rel) {
  rho.require_invertible("rho");
  require(rho.dim() == alg.ambient_dim(), ErrorKind::DimensionMismatch, "rho and algebra dimensions differ");
  ModularCheck out;
  const auto basis = alg.basis();
  for (double t : t_grid) {
    const Matrix u = rho.imag_power(t);
    for (const auto& b : basis)
      out.max_residual = std::max(out.max_residual, alg.residual(u * b * u.adjoint()));
  }
  out.holds = out.max_residual <= rel_tol;
  return out;
}

}  // namespace chanrev
