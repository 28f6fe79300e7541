#include "test_util.hpp"

using namespace chanrev;
using namespace chanrev::testing;

namespace {

struct ClassicalPair {
  std::vector<double> s, r;
  DensityOperator sigma, rho;
};

ClassicalPair classical_pair(int d, Rng& rng, bool sparse_sigma = false) {
  auto s = detail::random_probabilities(d, rng);
  auto r = detail::random_probabilities(d, rng);
  if (sparse_sigma) {
    s[0] = 0.0;
    double total = 0.0;
    for (double v : s) total += v;
    for (double& v : s) v /= total;
  }
  const Matrix u = random_unitary(d, rng);
  return {s, r, DensityOperator(hermitian_part(u * detail::diagonal_matrix(s) * u.adjoint())),
          DensityOperator(hermitian_part(u * detail::diagonal_matrix(r) * u.adjoint()))};
}

// Q(u) = sum s_i^u r_i^(1-u) with 0^0 = 0 on the zero entries.
double classical_q(const std::vector<double>& s, const std::vector<double>& r, double u) {
  double q = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] > 0 && r[i] > 0) q += std::pow(s[i], u) * std::pow(r[i], 1.0 - u);
  return q;
}

Matrix random_test(Eigen::Index d, Rng& rng) {
  const Matrix u = random_unitary(d, rng);
  std::vector<double> eig(d);
  for (auto& v : eig) v = rng.uniform();
  return hermitian_part(u * detail::diagonal_matrix(eig) * u.adjoint());
}

// Eigenvalues of d(sigma, rho) = rho^-1/2 sigma rho^-1/2, grouped.
SpectralDecomposition d_spectrum(const DensityOperator& sigma, const DensityOperator& rho) {
  const Matrix r = rho.power(-0.5);
  return hermitian_spectral(hermitian_part(r * sigma.matrix() * r), 1e-9);
}

}  // namespace

TEST(NPTest, Examples) {
  Rng rng(1);
  const DensityOperator sigma = DensityOperator::random(3, rng, 2);
  const DensityOperator rho = full_rank_state(3, rng);
  const NPTestResult zero = np_test(sigma, rho, 0.0);
  EXPECT_EQ(zero.P_plus.rank, 2);
  EXPECT_LE((zero.P_plus.projection - sigma.support().projection).norm(), 1e-9);
  EXPECT_NEAR(zero.trace_norm, 1.0, 1e-12);

  const NPTestResult same = np_test(rho, rho, 1.0);
  EXPECT_EQ(same.P_plus.rank, 0);
  EXPECT_EQ(same.P_zero.rank, 3);
  EXPECT_NEAR(same.trace_norm, 0.0, 1e-12);
}

TEST(NPTest, ClassicalIndicatorSets) {
  const std::vector<double> s = {0.1, 0.5, 0.4};
  const std::vector<double> r = {0.3, 0.2, 0.5};
  const DensityOperator sigma(detail::diagonal_matrix(s));
  const DensityOperator rho(detail::diagonal_matrix(r));
  for (double t : {0.0, 0.2, 0.5, 0.8, 1.0, 2.0, 3.0}) {
    const NPTestResult res = np_test(sigma, rho, t);
    double norm = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double diff = s[i] - t * r[i];
      norm += std::abs(diff);
      EXPECT_NEAR(res.P_plus.projection(i, i).real(), diff > 1e-12 ? 1.0 : 0.0, 1e-12) << "t=" << t << " i=" << i;
      EXPECT_NEAR(res.P_zero.projection(i, i).real(), std::abs(diff) <= 1e-12 ? 1.0 : 0.0, 1e-12);
    }
    EXPECT_NEAR(res.trace_norm, norm, 1e-14);
  }
}

TEST(NPTest, Invariants) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityOperator sigma = DensityOperator::random(4, rng);
    const DensityOperator rho = full_rank_state(4, rng);
    const double t = 2.0 * rng.uniform();
    const NPTestResult res = np_test(sigma, rho, t);
    const Matrix diff = sigma.matrix() - t * rho.matrix();
    EXPECT_LE((res.P_plus.projection * res.P_zero.projection).norm(), 1e-10);
    EXPECT_NEAR((diff * res.P_plus.projection).trace().real(), res.positive_part, 1e-10);
    EXPECT_NEAR(res.trace_norm, trace_norm(diff), 1e-10);
    // ||a||_1 = 2 Tr a_+ - Tr a.
    EXPECT_NEAR(res.trace_norm, 2.0 * res.positive_part - (1.0 - t), 1e-10);
  }
}

TEST(Bayes, Examples) {
  Rng rng(3);
  const DensityOperator rho = full_rank_state(2, rng);
  EXPECT_NEAR(bayes_error(rho, rho, 0.5), 0.5, 1e-14);
  EXPECT_NEAR(bayes_error(DensityOperator(diag({1, 0})), DensityOperator(diag({0, 1})), 0.5), 0.0, 1e-14);
}

TEST(Bayes, OptimalAndBelowRandomTests) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 2 + trial % 2;
    const DensityOperator sigma = DensityOperator::random(d, rng);
    const DensityOperator rho = DensityOperator::random(d, rng);
    const double s = trial == 0 ? 0.3 : rng.uniform(0.05, 0.95);
    const double pi = bayes_error(sigma, rho, s);
    const NPTestResult np = np_test(sigma, rho, s / (1.0 - s));
    EXPECT_NEAR(test_error(sigma, rho, s, np.P_plus.projection), pi, 1e-12);
    const int samples = trial == 0 ? 10000 : 1000;
    for (int k = 0; k < samples; ++k) ASSERT_LE(pi, test_error(sigma, rho, s, random_test(d, rng)) + 1e-12);
  }
}

TEST(Chernoff, Examples) {
  Rng rng(5);
  const DensityOperator rho = full_rank_state(3, rng);
  EXPECT_NEAR(chernoff(rho, rho).value, 0.0, 1e-12);
  EXPECT_EQ(chernoff(DensityOperator(diag({1, 0})), DensityOperator(diag({0, 1}))).value, kInfinity);
  EXPECT_GT(chernoff(DensityOperator::random(3, rng), rho).value, 1e-6);
}

TEST(Chernoff, ClassicalGridOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = classical_pair(3, rng, trial % 3 == 0);
    double best = kInfinity;
    for (int k = 0; k <= 10000; ++k) best = std::min(best, classical_q(c.s, c.r, k / 10000.0));
    const auto res = chernoff(c.sigma, c.rho);
    EXPECT_NEAR(res.value, -std::log(best), 1e-8);
    EXPECT_GE(res.minimizer_u, 0.0);
    EXPECT_LE(res.minimizer_u, 1.0);
  }
}

TEST(Hoeffding, Examples) {
  Rng rng(7);
  const DensityOperator rho = full_rank_state(3, rng);
  EXPECT_NEAR(hoeffding(rho, rho, 0.0), 0.0, 1e-9);
  const DensityOperator sigma = full_rank_state(3, rng);
  EXPECT_NEAR(hoeffding(sigma, rho, 50.0), 0.0, 1e-9);
  EXPECT_THROW(hoeffding(sigma, rho, -1.0), Error);
}

TEST(Hoeffding, ClassicalGridOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = classical_pair(3, rng);
    const double r = 0.1;
    double best = -kInfinity;
    for (int k = 0; k < 10000; ++k) {
      const double u = k / 10000.0;
      best = std::max(best, (-u * r - std::log(classical_q(c.s, c.r, u))) / (1.0 - u));
    }
    const double got = hoeffding(c.sigma, c.rho, r);
    EXPECT_GE(got, best - 1e-9);
    EXPECT_LE(got, best + 1e-6);
  }
}

TEST(Hoeffding, ZeroRateIsRelativeEntropy) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityOperator sigma = DensityOperator::random(3, rng, 1 + trial % 3);
    const DensityOperator rho = full_rank_state(3, rng);
    EXPECT_NEAR(hoeffding(sigma, rho, 0.0), relative_entropy(sigma, rho), 1e-6);
  }
}

TEST(Hoeffding, Plateau) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityOperator sigma = DensityOperator::random(3, rng, 1 + trial % 3);
    const DensityOperator rho = full_rank_state(3, rng);
    const double threshold = hoeffding_threshold(sigma, rho);
    const double plateau = -std::log((sigma.support().projection * rho.matrix()).trace().real());
    for (double extra : {0.0, 0.1, 1.0})
      EXPECT_NEAR(hoeffding(sigma, rho, threshold + extra), plateau, 1e-8) << "trial " << trial;
    if (threshold > 0.05) EXPECT_GT(hoeffding(sigma, rho, threshold - 0.05), plateau + 1e-6);
  }
}

TEST(HoeffdingThreshold, Examples) {
  Rng rng(11);
  const DensityOperator sigma = full_rank_state(3, rng);
  const DensityOperator rho = full_rank_state(3, rng);
  EXPECT_NEAR(hoeffding_threshold(sigma, rho), relative_entropy(rho, sigma), 1e-9);
  EXPECT_NEAR(hoeffding_threshold(rho, rho), 0.0, 1e-12);

  const std::vector<double> s = {0.0, 0.4, 0.6};
  const std::vector<double> r = {0.2, 0.3, 0.5};
  const double tq = 0.8;
  const double oracle = -std::log(tq) + (0.3 * std::log(0.3 / 0.4) + 0.5 * std::log(0.5 / 0.6)) / tq;
  EXPECT_NEAR(hoeffding_threshold(DensityOperator(detail::diagonal_matrix(s)), DensityOperator(detail::diagonal_matrix(r))),
              oracle, 1e-12);
}

TEST(L1Family, Examples) {
  Rng rng(12);
  const DensityOperator sigma = full_rank_state(3, rng);
  const DensityOperator rho = full_rank_state(3, rng);
  const auto id = l1_equality_family(Channel::identity(3), sigma, rho);
  EXPECT_LE(std::max(std::abs(id.max_gap), std::abs(id.min_gap)), 1e-12);

  const DensityOperator ds(diag({0.2, 0.3, 0.5}));
  const DensityOperator dr(diag({0.4, 0.4, 0.2}));
  const Channel pinch = Channel::pinching({diag({1, 0, 0}), diag({0, 1, 0}), diag({0, 0, 1})});
  const auto classical = l1_equality_family(pinch, ds, dr);
  EXPECT_LE(std::max(std::abs(classical.max_gap), std::abs(classical.min_gap)), 1e-12);

  const auto ce = fdiv_counterexample();
  EXPECT_GT(l1_equality_family(ce.instance.t, ce.instance.sigmas[0], ce.instance.rho).max_gap, 1e-6);
}

TEST(L1Family, MonotoneOnDefaultGrid) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Channel t = random_channel(3, 2 + trial % 2, rng);
    const DensityOperator sigma = DensityOperator::random(3, rng);
    const DensityOperator rho = full_rank_state(3, rng);
    EXPECT_GE(l1_equality_family(t, sigma, rho, {}, 1 + trial % 2).min_gap, -1e-9);
  }
}

TEST(L1Family, SizeCap) {
  const DensityOperator rho = DensityOperator::maximally_mixed(4);
  try {
    l1_equality_family(Channel::identity(4), rho, rho, {1.0}, 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SizeCapExceeded);
  }
}

TEST(SpectralKernel, KernelRankIsMultiplicity) {
  Rng rng(14);
  for (int d = 2; d <= 4; ++d) {
    for (int trial = 0; trial < 50; ++trial) {
      const DensityOperator rho = full_rank_state(d, rng);
      // Every third pair has a repeated eigenvalue of d(sigma, rho).
      Matrix sigma_m = DensityOperator::random(d, rng).matrix();
      if (trial % 3 == 0) {
        const Matrix r = rho.power(0.5);
        const Matrix u = random_unitary(d, rng);
        std::vector<double> ev(d, 0.7);
        ev[0] = 1.6;
        sigma_m = r * u * detail::diagonal_matrix(ev) * u.adjoint() * r;
        sigma_m /= sigma_m.trace().real();
      }
      const DensityOperator sigma(hermitian_part(sigma_m));
      const auto spec = d_spectrum(sigma, rho);
      for (std::size_t i = 0; i < spec.size(); ++i) {
        const double t = spec.eigenvalues[i];
        EXPECT_EQ(np_test(sigma, rho, t, 1e-9).P_zero.rank, spec.multiplicity(i));
      }
    }
  }
}

TEST(SpectralKernel, RightContinuityOfPositiveProjection) {
  Rng rng(15);
  for (int d = 2; d <= 4; ++d) {
    for (int trial = 0; trial < 50; ++trial) {
      const DensityOperator rho = full_rank_state(d, rng);
      const DensityOperator sigma = full_rank_state(d, rng);
      const auto spec = d_spectrum(sigma, rho);
      // Eigenvalues are descending; walk them in increasing order.
      for (std::size_t k = spec.size(); k-- > 0;) {
        const double ti = spec.eigenvalues[k];
        const NPTestResult at = np_test(sigma, rho, ti, 1e-9);
        const NPTestResult left = np_test(sigma, rho, ti - 1e-7, 1e-12);
        EXPECT_EQ(left.P_plus.rank, at.P_plus.rank + at.P_zero.rank);
        const double next = k > 0 ? spec.eigenvalues[k - 1] : ti + 1.0;
        for (int j = 1; j <= 5; ++j) {
          const double s = ti + (next - ti) * j / 6.0;
          EXPECT_EQ(np_test(sigma, rho, s, 1e-12).P_plus.rank, at.P_plus.rank);
        }
      }
    }
  }
}

TEST(Monotonicity, ChernoffAndHoeffding) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const Channel t = random_channel(3, 2 + trial % 3, rng);
    const DensityOperator sigma = full_rank_state(3, rng);
    const DensityOperator rho = full_rank_state(3, rng);
    const DensityOperator ts = t.apply(sigma);
    const DensityOperator tr = t.apply(rho);
    EXPECT_LE(chernoff(ts, tr).value, chernoff(sigma, rho).value + 1e-8);
    for (double r : {0.0, 0.05, 0.2}) EXPECT_LE(hoeffding(ts, tr, r), hoeffding(sigma, rho, r) + 1e-8);
    for (double x : {0.0, 0.5, 1.0, 2.0})
      EXPECT_LE(trace_norm(Matrix(ts.matrix() - x * tr.matrix())),
                trace_norm(Matrix(sigma.matrix() - x * rho.matrix())) + 1e-9);
  }
}
