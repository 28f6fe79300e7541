#include "test_util.hpp"

using namespace chanrev;
using namespace chanrev::testing;

namespace {

// Rank of the span of all words of length <= 4 in the generators and their adjoints.
Eigen::Index word_span_dimension(const std::vector<Matrix>& gens, Eigen::Index d) {
  std::vector<Matrix> letters = gens;
  for (const auto& g : gens) letters.push_back(g.adjoint());
  std::vector<Matrix> words = {identity(d)};
  std::vector<Matrix> frontier = words;
  for (int len = 1; len <= 4; ++len) {
    std::vector<Matrix> next;
    for (const auto& w : frontier)
      for (const auto& l : letters) next.push_back(w * l);
    words.insert(words.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  Matrix stacked(d * d, static_cast<Eigen::Index>(words.size()));
  for (std::size_t i = 0; i < words.size(); ++i) stacked.col(static_cast<Eigen::Index>(i)) = vec(words[i]);
  Eigen::JacobiSVD<Matrix> svd(stacked);
  svd.setThreshold(1e-10);
  return svd.rank();
}

// Kernel dimension of x -> [x, b_i] over all i, computed by a dense SVD.
Eigen::Index commutator_kernel_dimension(const AlgebraBasis& alg) {
  const Eigen::Index d = alg.ambient_dim();
  const auto b = alg.basis();
  Matrix m(static_cast<Eigen::Index>(b.size()) * d * d, d * d);
  for (std::size_t i = 0; i < b.size(); ++i)
    m.middleRows(static_cast<Eigen::Index>(i) * d * d, d * d) =
        kron(identity(d), b[i]) - kron(b[i].transpose(), identity(d));
  Eigen::JacobiSVD<Matrix> svd(m);
  svd.setThreshold(1e-10);
  return d * d - svd.rank();
}

void expect_algebra_invariants(const AlgebraBasis& alg) {
  const Matrix q = alg.stacked();
  EXPECT_LE((q.adjoint() * q - Matrix::Identity(q.cols(), q.cols())).norm(), 1e-10);
  EXPECT_LE(alg.closure_residual(), 1e-8);
}

}  // namespace

TEST(GeneratedAlgebra, Examples) {
  const AlgebraBasis scalars = generated_algebra({identity(3)}, 3);
  ASSERT_EQ(scalars.size(), 1);
  EXPECT_LE((scalars.element(0) - identity(3) / std::sqrt(3.0)).norm() *
                (scalars.element(0) + identity(3) / std::sqrt(3.0)).norm(),
            1e-10);

  const AlgebraBasis diagonal = generated_algebra({diag({1, 2})}, 2);
  EXPECT_EQ(diagonal.size(), 2);
  EXPECT_TRUE(diagonal.same_span(AlgebraBasis::diagonal(2)));

  const AlgebraBasis m2 = generated_algebra({pauli_x(), pauli_z()}, 2);
  EXPECT_EQ(m2.size(), word_span_dimension({pauli_x(), pauli_z()}, 2));
  EXPECT_EQ(m2.size(), 4);
  expect_algebra_invariants(m2);
}

TEST(GeneratedAlgebra, MatchesWordSpan) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto blocks = detail::random_block_algebra(4, rng);
    const std::vector<Matrix> gens = {blocks.sample_state(rng), blocks.sample_state(rng)};
    const AlgebraBasis alg = generated_algebra(gens, 4);
    expect_algebra_invariants(alg);
    EXPECT_EQ(alg.size(), word_span_dimension(gens, 4));
    EXPECT_TRUE(alg.contains_identity());
  }
}

TEST(Commutant, Examples) {
  EXPECT_EQ(commutant(AlgebraBasis::scalars(3)).size(), 9);
  const AlgebraBasis trivial = commutant(AlgebraBasis::full(3));
  EXPECT_EQ(trivial.size(), 1);
  EXPECT_TRUE(trivial.contains(identity(3)));
  const AlgebraBasis dc = commutant(AlgebraBasis::diagonal(3));
  EXPECT_EQ(dc.size(), commutator_kernel_dimension(AlgebraBasis::diagonal(3)));
  EXPECT_TRUE(dc.same_span(AlgebraBasis::diagonal(3)));
}

TEST(Commutant, KernelOracleAndDoubleCommutant) {
  Rng rng(2);
  for (int trial = 0; trial < 15; ++trial) {
    const int d = 2 + trial % 3;
    const auto blocks = detail::random_block_algebra(d, rng);
    const AlgebraBasis c = commutant(blocks.basis);
    expect_algebra_invariants(c);
    EXPECT_EQ(c.size(), commutator_kernel_dimension(blocks.basis));
    EXPECT_TRUE(commutant(c).same_span(blocks.basis));
  }
}

TEST(Structure, Examples) {
  const BlockStructure full = structure_decomposition(AlgebraBasis::full(3));
  ASSERT_EQ(full.blocks.size(), 1u);
  EXPECT_EQ(full.blocks[0], std::make_pair(3, 1));

  const BlockStructure diagonal = structure_decomposition(AlgebraBasis::diagonal(4));
  ASSERT_EQ(diagonal.blocks.size(), 4u);
  for (auto b : diagonal.blocks) EXPECT_EQ(b, std::make_pair(1, 1));

  std::vector<Matrix> gens;
  for (const Matrix& p : {pauli_x(), pauli_z()}) gens.push_back(kron(p, identity(2)));
  const AlgebraBasis tensor = generated_algebra(gens, 4);
  EXPECT_EQ(tensor.size(), 4);
  const BlockStructure s = structure_decomposition(tensor);
  ASSERT_EQ(s.blocks.size(), 1u);
  EXPECT_EQ(s.blocks[0], std::make_pair(2, 2));
  EXPECT_LE((s.unitary.adjoint() * s.unitary - identity(4)).norm(), 1e-10);
  // The conjugated basis has the shape X (x) I_2.
  for (const auto& b : tensor.basis()) {
    const Matrix c = s.unitary.adjoint() * b * s.unitary;
    EXPECT_LE((c - kron(s.factors(b)[0], identity(2))).norm(), 1e-8);
  }
}

TEST(Structure, RandomBlockAlgebras) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 3;
    const auto blocks = detail::random_block_algebra(d, rng);
    const BlockStructure s = structure_decomposition(blocks.basis, 100 + trial);
    EXPECT_EQ(s.covered(), d);
    EXPECT_LE(s.residual(blocks.basis), 1e-8);
    auto expected = blocks.structure.blocks;
    auto got = s.blocks;
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, expected);
    const Matrix z = center(blocks.basis).stacked();
    EXPECT_EQ(z.cols(), static_cast<Eigen::Index>(expected.size()));
  }
}

TEST(ConditionalExpectation, Examples) {
  EXPECT_LE((trace_conditional_expectation(AlgebraBasis::full(3)).super() - identity(9)).norm(), 1e-12);
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_LE((trace_conditional_expectation(AlgebraBasis::diagonal(2)).apply(m) - diag({1, 4})).norm(), 1e-14);
}

TEST(ConditionalExpectation, TracePropertyAndIdempotence) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const AlgebraBasis alg = generated_algebra({random_hermitian(4, rng) * kron(diag({1, 0}), identity(2)),
                                                kron(identity(2), random_hermitian(2, rng))},
                                               4);
    const Channel e = trace_conditional_expectation(alg);
    const auto basis = alg.basis();
    for (int i = 0; i < 50; ++i) {
      const Matrix x = ginibre(4, 4, rng);
      Matrix b = Matrix::Zero(4, 4);
      for (const auto& v : basis) b += Complex(rng.normal(), rng.normal()) * v;
      EXPECT_LE(std::abs((e.apply(x) * b).trace() - (x * b).trace()), 1e-10 * std::max(1.0, (x * b).norm()));
    }
    EXPECT_LE((e.super() * e.super() - e.super()).norm(), 1e-10);
    for (const auto& v : basis) EXPECT_LE((e.apply(v) - v).norm(), 1e-10);
    EXPECT_LE((e.apply(identity(4)) - identity(4)).norm(), 1e-10);
    EXPECT_TRUE(positivity_report(e, 20, 1).completely_positive);
  }
}

TEST(Modular, Examples) {
  Rng rng(5);
  const DensityOperator rho = full_rank_state(3, rng);
  const auto full = modular_invariance_check(rho, AlgebraBasis::full(3));
  EXPECT_TRUE(full.holds);
  EXPECT_LE(full.max_residual, 1e-10);

  const DensityOperator diagonal(diag({0.2, 0.3, 0.5}));
  EXPECT_TRUE(modular_invariance_check(diagonal, AlgebraBasis::diagonal(3)).holds);

  Matrix r(2, 2);
  r << 0.35, Complex(0.1, 0.05), Complex(0.1, -0.05), 0.65;
  const DensityOperator noncommuting(r);
  const auto check = modular_invariance_check(noncommuting, generated_algebra({pauli_z()}, 2));
  EXPECT_FALSE(check.holds);
  EXPECT_GT(check.max_residual, 1e-3);
}

TEST(Modular, RequiresInvertible) {
  try {
    modular_invariance_check(DensityOperator(diag({1, 0})), AlgebraBasis::full(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotInvertible);
  }
}
