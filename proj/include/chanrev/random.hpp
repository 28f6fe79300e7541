#pragma once

// Seeded random matrices: Ginibre states, Haar unitaries via QR, random
// Hermitian matrices and Stinespring-style random Kraus families.

#include "chanrev/linalg.hpp"

#include <cstdint>
#include <random>

namespace chanrev {

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Matrix with iid standard complex Gaussian entries.
inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
  return g;
}

inline Vector random_unit_vector(Eigen::Index d, Rng& rng) {
  Vector v = ginibre(d, 1, rng).col(0);
  return v / v.norm();
}

/// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal removed.
inline Matrix random_unitary(Eigen::Index d, Rng& rng) {
  const Matrix g = ginibre(d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    const Complex diag = r(i, i);
    const double mag = std::abs(diag);
    if (mag > 0) q.col(i) *= diag / mag;
  }
  return q;
}

inline Matrix random_hermitian(Eigen::Index d, Rng& rng) {
  const Matrix g = ginibre(d, d, rng);
  return hermitian_part(g);
}

/// Ginibre-induced density matrix G G* / Tr(G G*) with G of shape d x rank.
inline Matrix random_density_matrix(Eigen::Index d, Rng& rng, Eigen::Index rank = -1) {
  if (rank < 0) rank = d;
  require(rank >= 1 && rank <= d, ErrorKind::InvalidArgument, "rank must lie in [1, d]");
  const Matrix g = ginibre(d, rank, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return hermitian_part(rho);
}

/// Kraus operators of a random CPTP map in_dim -> out_dim: the columns of a
/// Haar isometry in_dim -> out_dim * count, split into row blocks.
inline std::vector<Matrix> random_kraus(Eigen::Index in_dim, Eigen::Index out_dim, Eigen::Index count,
                                        Rng& rng) {
  require(out_dim * count >= in_dim, ErrorKind::InvalidArgument,
          "random_kraus needs out_dim * count >= in_dim");
  const Matrix u = random_unitary(out_dim * count, rng);
  const Matrix v = u.leftCols(in_dim);
  std::vector<Matrix> ks;
  ks.reserve(count);
  for (Eigen::Index k = 0; k < count; ++k) ks.push_back(v.middleRows(k * out_dim, out_dim));
  return ks;
}

}  // namespace chanrev
