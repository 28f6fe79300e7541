#pragma once

// Constructed problem instances: reversible families of several kinds,
// generic random problems, and the two counterexamples where a single
// preserved quantity does not force reversibility.

#include "chanrev/algebra.hpp"
#include "chanrev/channel.hpp"
#include "chanrev/divergence.hpp"
#include "chanrev/fisher.hpp"
#include "chanrev/random.hpp"
#include "chanrev/reversibility.hpp"
#include "chanrev/state.hpp"

#include <string>

namespace chanrev {

struct Instance {
  std::string label;
  Channel t;
  DensityOperator rho;
  std::vector<DensityOperator> sigmas;
};

enum class ReversibleKind { Identity, Unitary, ConditionalExpectation, Ancilla, Classical };

inline std::string_view to_string(ReversibleKind k) {
  switch (k) {
    case ReversibleKind::Identity: return "identity";
    case ReversibleKind::Unitary: return "unitary";
    case ReversibleKind::ConditionalExpectation: return "conditional_expectation";
    case ReversibleKind::Ancilla: return "ancilla";
    case ReversibleKind::Classical: return "classical";
  }
  return "?";
}

namespace detail {

/// Full-rank state whose smallest eigenvalue is at least `floor` / d.
inline Matrix well_conditioned_state(Eigen::Index d, Rng& rng, double floor = 0.05) {
  const Matrix r = random_density_matrix(d, rng);
  return hermitian_part((1.0 - floor) * r + floor * identity(d) / static_cast<double>(d));
}

inline std::vector<double> random_probabilities(Eigen::Index n, Rng& rng, double floor = 0.05) {
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) {
    v = floor + rng.uniform();
    s += v;
  }
  for (auto& v : p) v /= s;
  return p;
}

/// Random proper block shape sum n_k m_k = d (not the full algebra M_d).
inline std::vector<std::pair<int, int>> random_block_shape(int d, Rng& rng) {
  std::vector<std::vector<std::pair<int, int>>> options;
  if (d == 2) options = {{{1, 1}, {1, 1}}};
  if (d == 3) options = {{{2, 1}, {1, 1}}, {{1, 1}, {1, 1}, {1, 1}}};
  if (d == 4) options = {{{2, 2}}, {{2, 1}, {1, 1}, {1, 1}}, {{2, 1}, {2, 1}}, {{1, 2}, {1, 1}, {1, 1}}, {{3, 1}, {1, 1}}};
  if (options.empty()) {
    std::vector<std::pair<int, int>> diag(d, {1, 1});
    return diag;
  }
  return options[rng.integer(0, static_cast<int>(options.size()) - 1)];
}

/// Block algebra U ((+)_k M_{n_k} (x) I_{m_k}) U* with a state-valued
/// sampler producing full-rank members of the algebra.
struct RandomBlockAlgebra {
  BlockStructure structure;
  AlgebraBasis basis;

  Matrix sample_state(Rng& rng) const {
    const auto w = random_probabilities(static_cast<Eigen::Index>(structure.blocks.size()), rng);
    std::vector<Matrix> xs;
    for (std::size_t k = 0; k < structure.blocks.size(); ++k) {
      const auto [n, m] = structure.blocks[k];
      xs.push_back(w[k] * well_conditioned_state(n, rng) / static_cast<double>(m));
    }
    return hermitian_part(structure.assemble(xs));
  }
};

inline RandomBlockAlgebra random_block_algebra(int d, Rng& rng) {
  RandomBlockAlgebra a;
  a.structure.unitary = random_unitary(d, rng);
  a.structure.blocks = random_block_shape(d, rng);
  a.basis = AlgebraBasis(d);
  std::size_t k = 0;
  for (auto [n, m] : a.structure.blocks) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::vector<Matrix> xs;
        for (std::size_t l = 0; l < a.structure.blocks.size(); ++l) {
          const int nl = a.structure.blocks[l].first;
          xs.push_back(Matrix::Zero(nl, nl));
        }
        xs[k](i, j) = 1.0;
        a.basis.add(a.structure.assemble(xs));
      }
    ++k;
  }
  return a;
}

/// Diagonal channel merging outcome x into group[x].
inline Channel merging_channel(const std::vector<int>& group, int groups) {
  const Eigen::Index d = static_cast<Eigen::Index>(group.size());
  std::vector<Matrix> ks;
  for (Eigen::Index x = 0; x < d; ++x) {
    Matrix k = Matrix::Zero(groups, d);
    k(group[x], x) = 1.0;
    ks.push_back(k);
  }
  return Channel::from_kraus(std::move(ks));
}

inline Matrix diagonal_matrix(const std::vector<double>& p) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) m(i, i) = p[i];
  return m;
}

}  // namespace detail

/// A reversible channel with a family of `family` states in dimension d.
/// Classical instances merge d outcomes into ceil(d/2) groups with states
/// p(x) = g(group(x)) h(x) sharing h.
inline Instance reversible_instance(ReversibleKind kind, int d, int family, Rng& rng) {
  require(d >= 2 && family >= 1, ErrorKind::InvalidArgument, "need d >= 2 and a nonempty family");
  auto random_states = [&](auto&& sample) {
    std::vector<DensityOperator> out;
    for (int k = 0; k < family; ++k) out.emplace_back(sample());
    return out;
  };
  switch (kind) {
    case ReversibleKind::Identity: {
      auto gen = [&] { return detail::well_conditioned_state(d, rng); };
      return {"identity", Channel::identity(d), DensityOperator(gen()), random_states(gen)};
    }
    case ReversibleKind::Unitary: {
      auto gen = [&] { return detail::well_conditioned_state(d, rng); };
      return {"unitary", Channel::unitary(random_unitary(d, rng)), DensityOperator(gen()), random_states(gen)};
    }
    case ReversibleKind::ConditionalExpectation: {
      const auto alg = detail::random_block_algebra(d, rng);
      auto gen = [&] { return alg.sample_state(rng); };
      return {"conditional_expectation", trace_conditional_expectation(alg.basis), DensityOperator(gen()),
              random_states(gen)};
    }
    case ReversibleKind::Ancilla: {
      const Matrix omega = detail::well_conditioned_state(2, rng);
      auto gen = [&] { return detail::well_conditioned_state(d, rng); };
      return {"ancilla", Channel::append_ancilla(omega, d), DensityOperator(gen()), random_states(gen)};
    }
    case ReversibleKind::Classical: {
      const int groups = (d + 1) / 2;
      std::vector<int> group(d);
      for (int x = 0; x < d; ++x) group[x] = x % groups;
      const auto h = detail::random_probabilities(d, rng);
      auto gen = [&] {
        const auto g = detail::random_probabilities(groups, rng);
        std::vector<double> p(d);
        double s = 0.0;
        for (int x = 0; x < d; ++x) s += p[x] = g[group[x]] * h[x];
        for (auto& v : p) v /= s;
        return detail::diagonal_matrix(p);
      };
      return {"classical", detail::merging_channel(group, groups), DensityOperator(gen()), random_states(gen)};
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown instance kind");
}

/// Random CPTP map with `kraus` operators and random full-rank states.
inline Instance generic_instance(int in_dim, int out_dim, int family, Rng& rng, int kraus = 2) {
  Instance inst{"generic", Channel::from_kraus(random_kraus(in_dim, out_dim, kraus, rng)),
                DensityOperator(detail::well_conditioned_state(in_dim, rng)), {}};
  for (int k = 0; k < family; ++k) inst.sigmas.emplace_back(detail::well_conditioned_state(in_dim, rng));
  return inst;
}

/// Diagonal states under an outcome-merging channel, generically not sufficient.
inline Instance classical_generic_instance(int d, int family, Rng& rng) {
  const int groups = (d + 1) / 2;
  std::vector<int> group(d);
  for (int x = 0; x < d; ++x) group[x] = x % groups;
  Instance inst{"classical_generic", detail::merging_channel(group, groups),
                DensityOperator(detail::diagonal_matrix(detail::random_probabilities(d, rng))), {}};
  for (int k = 0; k < family; ++k)
    inst.sigmas.emplace_back(detail::diagonal_matrix(detail::random_probabilities(d, rng)));
  return inst;
}

// ---------------------------------------------------------------------------
// f-divergence counterexample

struct FdivCounterexample {
  Instance instance;  // one sigma
  Matrix p;
  Matrix x;
  double lambda = 0.0;
};

/// sigma invertible, p a projection with [sigma, p] != 0 and lambda = Tr p sigma != 1/2.
/// T is the pinching a -> p a p + q a q (q = I - p), x = (1 - lambda) p + lambda q
/// and rho = x sigma x / (lambda (1 - lambda)).
inline FdivCounterexample fdiv_counterexample(const Matrix& sigma, const Matrix& p) {
  const DensityOperator s(sigma);
  s.require_invertible("sigma");
  const Eigen::Index d = sigma.rows();
  require(p.rows() == d && p.cols() == d, ErrorKind::DimensionMismatch, "p must match sigma");
  require((p * p - p).norm() <= 1e-10 && is_hermitian(p), ErrorKind::InvalidArgument, "p must be a projection");
  const double lambda = (p * sigma).trace().real();
  require(std::abs(lambda - 0.5) > 1e-6, ErrorKind::InvalidArgument, "Tr p sigma must differ from 1/2");
  require(commutator(sigma, p).norm() > 1e-8, ErrorKind::InvalidArgument, "p must not commute with sigma");
  const Matrix q = identity(d) - p;
  const Matrix x = (1.0 - lambda) * p + lambda * q;
  const Matrix rho = hermitian_part(x * sigma * x / (lambda * (1.0 - lambda)));
  return {{"fdiv_counterexample", Channel::pinching({p, q}), DensityOperator::normalized(rho), {s}}, p, x, lambda};
}

/// Default qubit instance: p = |0><0|, sigma with Tr p sigma = 0.3.
inline FdivCounterexample fdiv_counterexample() {
  Matrix sigma(2, 2);
  sigma << 0.3, Complex(0.2, 0.1), Complex(0.2, -0.1), 0.7;
  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 1.0;
  return fdiv_counterexample(sigma, p);
}

struct FdivProbe {
  double lambda = 0.0;
  double sf_input = 0.0;
  double sf_output = 0.0;
  double sf_gap = 0.0;
  double recovery_residual = 0.0;
  /// ||[sigma, x]||
  double commutator_witness = 0.0;
  /// ||(L_sigma + R_rho)^-1(rho) - x|| and the same on the output side.
  double x_residual_input = 0.0;
  double x_residual_output = 0.0;
};

inline FdivProbe probe(const FdivCounterexample& c) {
  const Instance& inst = c.instance;
  const DensityOperator& sigma = inst.sigmas.front();
  const DensityOperator image_sigma = inst.t.apply(sigma);
  const DensityOperator image_rho = inst.t.apply(inst.rho);
  const auto f = catalog::inv_one_plus();
  FdivProbe out;
  out.lambda = c.lambda;
  out.sf_input = f_divergence(f, sigma, inst.rho);
  out.sf_output = f_divergence(f, image_sigma, image_rho);
  out.sf_gap = std::abs(out.sf_input - out.sf_output);
  const Channel recovery = petz_recovery(inst.t, inst.rho);
  out.recovery_residual = trace_norm(Matrix(recovery.apply(image_sigma.matrix()) - sigma.matrix()));
  out.commutator_witness = commutator(sigma.matrix(), c.x).norm();
  out.x_residual_input =
      (solve_sylvester_hermitian(sigma.matrix(), inst.rho.matrix(), inst.rho.matrix()) - c.x).norm();
  out.x_residual_output =
      (solve_sylvester_hermitian(image_sigma.matrix(), image_rho.matrix(), image_rho.matrix()) - c.x).norm();
  return out;
}

// ---------------------------------------------------------------------------
// Bures counterexample

struct BuresCounterexample {
  Instance instance;  // one sigma
  Matrix y;
};

/// y Hermitian with [rho, y] != 0; it is shifted to Tr rho y = 0 and scaled
/// so that sigma = rho + rho y + y rho keeps its smallest eigenvalue above
/// half of rho's. T is the pinching onto the eigenprojections of y.
inline BuresCounterexample bures_counterexample(const Matrix& rho_m, const Matrix& y_in) {
  const DensityOperator rho(rho_m);
  rho.require_invertible("rho");
  const Eigen::Index d = rho.dim();
  require(y_in.rows() == d && is_hermitian(y_in), ErrorKind::InvalidArgument, "y must be Hermitian of rho's size");
  Matrix y = hermitian_part(y_in - (rho.matrix() * y_in).trace().real() * identity(d));
  require(commutator(rho.matrix(), y).norm() > 1e-8, ErrorKind::InvalidArgument, "y must not commute with rho");
  const Matrix z = rho.matrix() * y + y * rho.matrix();
  const double scale = std::min(1.0, 0.5 * rho.min_eigenvalue() / std::max(operator_norm(z), 1e-300));
  y *= scale;
  const Matrix sigma = hermitian_part(rho.matrix() + scale * z);
  const SpectralDecomposition spec = hermitian_spectral(y, 1e-9 * std::max(1.0, operator_norm(y)));
  return {{"bures_counterexample", Channel::pinching(spec.projections), rho, {DensityOperator::normalized(sigma)}}, y};
}

/// Default qubit instance.
inline BuresCounterexample bures_counterexample() {
  Matrix rho(2, 2);
  rho << 0.35, Complex(0.1, 0.05), Complex(0.1, -0.05), 0.65;
  Matrix y(2, 2);
  y << 1.0, 0.0, 0.0, -1.0;
  return bures_counterexample(rho, y);
}

struct BuresProbe {
  double chi2_input = 0.0;
  double chi2_output = 0.0;
  double chi2_gap = 0.0;
  double recovery_residual = 0.0;
  double commutator_sigma_rho = 0.0;
  double commutator_rho2_y = 0.0;
  /// (L_rho + R_rho)^-1(sigma - rho) = y on both sides.
  double y_residual_input = 0.0;
  double y_residual_output = 0.0;
  double rich_gap = 0.0;
  double rich_support = 0.0;
  std::size_t spectrum_union = 0;
};

inline BuresProbe probe(const BuresCounterexample& c) {
  const Instance& inst = c.instance;
  const DensityOperator& sigma = inst.sigmas.front();
  const DensityOperator image_sigma = inst.t.apply(sigma);
  const DensityOperator image_rho = inst.t.apply(inst.rho);
  const auto bures = fisher_catalog::bures();
  BuresProbe out;
  out.chi2_input = chi2_divergence(sigma, inst.rho, bures);
  out.chi2_output = chi2_divergence(image_sigma, image_rho, bures);
  out.chi2_gap = std::abs(out.chi2_input - out.chi2_output);
  const Channel recovery = petz_recovery(inst.t, inst.rho);
  out.recovery_residual = trace_norm(Matrix(recovery.apply(image_sigma.matrix()) - sigma.matrix()));
  out.commutator_sigma_rho = commutator(sigma.matrix(), inst.rho.matrix()).norm();
  out.commutator_rho2_y = commutator(Matrix(inst.rho.matrix() * inst.rho.matrix()), c.y).norm();
  const Matrix x = sigma.matrix() - inst.rho.matrix();
  out.y_residual_input = (solve_sylvester_hermitian(inst.rho.matrix(), inst.rho.matrix(), x) - c.y).norm();
  const Matrix tx = image_sigma.matrix() - image_rho.matrix();
  out.y_residual_output = (solve_sylvester_hermitian(image_rho.matrix(), image_rho.matrix(), tx) - c.y).norm();
  const auto rich = fisher_catalog::rich(inst.rho.dim(), image_rho.dim());
  out.rich_gap = chi2_divergence(sigma, inst.rho, rich) - chi2_divergence(image_sigma, image_rho, rich);
  out.rich_support = rich.nu_support_size;
  out.spectrum_union = modular_spectrum_union_size(inst.rho, image_rho);
  return out;
}

}  // namespace chanrev
