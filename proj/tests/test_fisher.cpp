#include "test_util.hpp"

using namespace chanrev;
using namespace chanrev::testing;

namespace {

std::vector<MonotoneFunction> catalog_functions(Eigen::Index dh, Eigen::Index dk) {
  return {fisher_catalog::bures(), fisher_catalog::kubo_mori(), fisher_catalog::rld(), fisher_catalog::rich(dh, dk)};
}

Matrix random_tangent(Eigen::Index d, Rng& rng) {
  const Matrix h = random_hermitian(d, rng);
  return tangent_vector(Matrix(h - h.trace().real() / static_cast<double>(d) * identity(d)));
}

}  // namespace

TEST(Catalog, SymmetryAndNu) {
  for (const auto& f : catalog_functions(2, 3)) {
    EXPECT_LE(symmetry_residual(f), 1e-10) << f.tag;
    EXPECT_LE(nu_residual(f), 1e-9) << f.tag;
    EXPECT_NEAR(f(1.0), 1.0, 1e-12) << f.tag;
  }
  const auto b = fisher_catalog::bures();
  ASSERT_TRUE(b.nu.has_value());
  ASSERT_EQ(b.nu->size(), 1u);
  EXPECT_EQ((*b.nu)[0], std::make_pair(1.0, 2.0));
  EXPECT_EQ(fisher_catalog::rich(2, 3).nu_support_size, 26.0);
  EXPECT_FALSE(fisher_catalog::rld().nu.has_value());
  EXPECT_GT(symmetry_residual(fisher_catalog::f_s(0.5)), 1e-3);
  EXPECT_THROW(fisher_catalog::by_tag("nonsense"), Error);
}

TEST(MetricInverse, MaximallyMixedBures) {
  Rng rng(1);
  for (Eigen::Index d = 2; d <= 4; ++d) {
    const DensityOperator rho = DensityOperator::maximally_mixed(d);
    const Matrix x = random_tangent(d, rng);
    EXPECT_LE((metric_inverse_apply(rho, fisher_catalog::bures(), x) - static_cast<double>(d) * x).norm(), 1e-12);
    EXPECT_NEAR(fisher_metric(rho, fisher_catalog::bures(), x, x), d * (x * x).trace().real(), 1e-12);
  }
}

TEST(MetricInverse, SylvesterForFs) {
  Rng rng(2);
  for (double s : {0.0, 0.3, 1.0, 4.0}) {
    const DensityOperator rho = full_rank_state(3, rng);
    const Matrix x = ginibre(3, 3, rng);
    const Matrix y = metric_inverse_apply(rho, fisher_catalog::f_s(s), x);
    EXPECT_LE((s * y * rho.matrix() + rho.matrix() * y - x).norm(), 1e-10 * std::max(1.0, y.norm()));
  }
}

TEST(MetricInverse, RoundTrip) {
  Rng rng(3);
  for (const auto& f : catalog_functions(3, 3)) {
    const DensityOperator rho = full_rank_state(3, rng);
    const Matrix x = ginibre(3, 3, rng);
    EXPECT_LE((metric_apply(rho, f, metric_inverse_apply(rho, f, x)) - x).norm(), 1e-9) << f.tag;
    const Matrix s = metric_inverse_super(rho, f);
    EXPECT_LE((unvec(s * vec(x), 3, 3) - metric_inverse_apply(rho, f, x)).norm(), 1e-9) << f.tag;
  }
}

TEST(MetricInverse, RequiresInvertible) {
  try {
    metric_inverse_apply(DensityOperator(diag({1, 0})), fisher_catalog::bures(), identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotInvertible);
  }
}

TEST(FisherMetric, Examples) {
  Rng rng(4);
  const DensityOperator rho = full_rank_state(3, rng);
  EXPECT_EQ(fisher_metric(rho, fisher_catalog::bures(), Matrix::Zero(3, 3), Matrix::Zero(3, 3)), 0.0);

  const std::vector<double> p = {0.2, 0.3, 0.5};
  const std::vector<double> v = {0.1, -0.25, 0.15};
  const DensityOperator dr(detail::diagonal_matrix(p));
  const Matrix dx = detail::diagonal_matrix(v);
  double classical = 0.0;
  for (int i = 0; i < 3; ++i) classical += v[i] * v[i] / p[i];
  for (const auto& f : catalog_functions(3, 3)) EXPECT_NEAR(fisher_metric(dr, f, dx, dx), classical, 1e-12) << f.tag;

  // Bures on a qubit equals 2 Tr x (L + R)^-1 x.
  const DensityOperator q = full_rank_state(2, rng);
  const Matrix x = pauli_z() / std::sqrt(2.0);
  const Matrix lr = solve_sylvester_hermitian(q.matrix(), q.matrix(), x);
  EXPECT_NEAR(fisher_metric(q, fisher_catalog::bures(), x, x), 2.0 * (x * lr).trace().real(), 1e-12);
}

TEST(FisherMetric, SymmetricAndPositive) {
  Rng rng(5);
  for (const auto& f : catalog_functions(3, 3)) {
    const DensityOperator rho = full_rank_state(3, rng);
    const Matrix x = random_tangent(3, rng);
    const Matrix y = random_tangent(3, rng);
    EXPECT_NEAR(fisher_metric(rho, f, x, y), fisher_metric(rho, f, y, x), 1e-10) << f.tag;
    EXPECT_GT(fisher_metric(rho, f, x, x), 0.0) << f.tag;
  }
}

TEST(Chi2, Examples) {
  Rng rng(6);
  const DensityOperator rho = full_rank_state(3, rng);
  EXPECT_NEAR(chi2_divergence(rho, rho, fisher_catalog::kubo_mori()), 0.0, 1e-14);
  const std::vector<double> s = {0.1, 0.6, 0.3};
  const std::vector<double> r = {0.3, 0.3, 0.4};
  double classical = 0.0;
  for (int i = 0; i < 3; ++i) classical += (s[i] - r[i]) * (s[i] - r[i]) / r[i];
  for (const auto& f : catalog_functions(3, 3))
    EXPECT_NEAR(chi2_divergence(DensityOperator(detail::diagonal_matrix(s)), DensityOperator(detail::diagonal_matrix(r)),
                                f),
                classical, 1e-12)
        << f.tag;
}

TEST(Chi2, Monotone) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index in = 2 + trial % 3;
    const Eigen::Index out = 2 + (trial / 3) % 3;
    const Channel t = random_channel(in, out, rng, 2);
    const DensityOperator sigma = full_rank_state(in, rng);
    const DensityOperator rho = full_rank_state(in, rng);
    const DensityOperator ts = t.apply(sigma);
    const DensityOperator tr = t.apply(rho);
    for (const auto& f : catalog_functions(in, out))
      EXPECT_LE(chi2_divergence(ts, tr, f), chi2_divergence(sigma, rho, f) + 1e-9) << f.tag;
  }
}

TEST(Chi2, MetricFormMonotone) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index in = 2 + trial % 2;
    const Eigen::Index out = 2 + (trial / 2) % 2;
    const Channel t = random_channel(in, out, rng, 2);
    const DensityOperator rho = full_rank_state(in, rng);
    for (const auto& f : catalog_functions(in, out))
      EXPECT_GE(metric_monotonicity_margin(t, rho, f), -1e-8) << f.tag;
  }
}

TEST(Tangent, ValidationAndInterval) {
  Rng rng(12);
  EXPECT_THROW(tangent_vector(identity(2)), Error);
  EXPECT_THROW(tangent_vector(ginibre(2, 2, rng)), Error);
  const DensityOperator rho(diag({0.25, 0.75}));
  const auto [lo, hi] = tangent_interval(rho, pauli_z());
  EXPECT_NEAR(lo, -0.99 * 0.25, 1e-12);
  EXPECT_NEAR(hi, 0.99 * 0.75, 1e-12);
}

TEST(EqualityCheck, Identity) {
  Rng rng(9);
  const DensityOperator rho = full_rank_state(3, rng);
  const Matrix x = random_tangent(3, rng);
  const auto res = fisher_equality_check(Channel::identity(3), rho, x, fisher_catalog::kubo_mori());
  EXPECT_NEAR(res.metric_gap, 0.0, 1e-10);
  EXPECT_LE(res.max_per_s, 1e-10);
  EXPECT_LE(res.max_cocycle, 1e-10);
  EXPECT_LE(res.sqrt_residual, 1e-10);
  EXPECT_EQ(res.per_s.size(), default_s_grid().size());
}

TEST(EqualityCheck, BuresCounterexample) {
  const auto ce = bures_counterexample();
  const auto& inst = ce.instance;
  const Matrix x = inst.sigmas[0].matrix() - inst.rho.matrix();
  const auto res = fisher_equality_check(inst.t, inst.rho, x, fisher_catalog::bures());
  EXPECT_NEAR(res.metric_gap, 0.0, 1e-10);
  EXPECT_LE(res.max_per_s, 1e-10);
  EXPECT_GT(res.sqrt_residual, 1e-3);
  const auto pr = probe(ce);
  EXPECT_GT(pr.commutator_sigma_rho, 1e-6);
  EXPECT_NEAR(pr.commutator_sigma_rho, pr.commutator_rho2_y, 1e-12);
  EXPECT_LE(pr.y_residual_input, 1e-10);
  EXPECT_LE(pr.y_residual_output, 1e-10);
  EXPECT_LT(fisher_catalog::bures().nu_support_size, static_cast<double>(pr.spectrum_union));
  EXPECT_GE(pr.rich_support, static_cast<double>(pr.spectrum_union));
  EXPECT_GT(pr.rich_gap, 1e-6);
}

TEST(EqualityCheck, ReversibleInstance) {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance inst = reversible_instance(ReversibleKind::ConditionalExpectation, 3 + trial % 2, 2, rng);
    const Matrix x = inst.sigmas[0].matrix() - inst.rho.matrix();
    for (const auto& f : catalog_functions(inst.t.in_dim(), inst.t.out_dim())) {
      const auto res = fisher_equality_check(inst.t, inst.rho, x, f);
      EXPECT_NEAR(res.metric_gap, 0.0, 1e-9) << f.tag;
      EXPECT_LE(res.max_per_s, 1e-9) << f.tag;
      EXPECT_LE(res.max_cocycle, 1e-9) << f.tag;
      EXPECT_LE(res.sqrt_residual, 1e-9) << f.tag;
    }
  }
}

TEST(EqualityCheck, SqrtConditionMatchesRecovery) {
  Rng rng(11);
  std::vector<Instance> instances;
  for (int k = 0; k < 4; ++k)
    instances.push_back(reversible_instance(static_cast<ReversibleKind>(k), 2 + k % 2, 1, rng));
  instances.push_back(bures_counterexample().instance);
  for (int k = 0; k < 4; ++k) instances.push_back(generic_instance(3, 2 + k % 2, 1, rng));
  for (const auto& inst : instances) {
    const Matrix x = inst.sigmas[0].matrix() - inst.rho.matrix();
    const bool condition = fisher_equality_check(inst.t, inst.rho, x, fisher_catalog::bures()).sqrt_residual <= 1e-9;
    const Channel rec = petz_recovery(inst.t, inst.rho);
    const auto [lo, hi] = tangent_interval(inst.rho, x);
    bool recovered = true;
    for (int k = 1; k <= 5; ++k) {
      const double u = lo + (std::min(hi, 1.0) - lo) * k / 6.0;
      const Matrix su = inst.rho.matrix() + u * x;
      recovered = recovered && trace_norm(Matrix(rec.apply(inst.t.apply(su)) - su)) <= 1e-9;
    }
    EXPECT_EQ(condition, recovered) << inst.label;
  }
}

TEST(ModularSpectrum, UnionSize) {
  const DensityOperator rho(diag({0.2, 0.8}));
  const auto spec = modular_spectrum(rho);
  EXPECT_EQ(spec.size(), 3u);
  EXPECT_EQ(modular_spectrum_union_size(rho, rho), 3u);
  EXPECT_EQ(modular_spectrum_union_size(rho, DensityOperator::maximally_mixed(2)), 3u);
  EXPECT_EQ(modular_spectrum_union_size(rho, DensityOperator(diag({0.4, 0.6}))), 5u);
}
