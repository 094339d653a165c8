#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "perov/ndmatrix.hpp"
#include "test_support.hpp"

namespace perov {
namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(NonnegativeMatrix, RejectsBadInput) {
  EXPECT_THROW(NonnegativeMatrix(Eigen::MatrixXd(2, 3)), InvalidInput);
  EXPECT_THROW(NonnegativeMatrix(Eigen::MatrixXd(0, 0)), InvalidInput);
  EXPECT_THROW(NonnegativeMatrix(mat2(0.1, -0.1, 0.0, 0.0)), InvalidInput);
  EXPECT_THROW(NonnegativeMatrix(mat2(0.1, std::nan(""), 0.0, 0.0)), InvalidInput);
  EXPECT_THROW(NonnegativeMatrix(mat2(0.1, std::numeric_limits<double>::infinity(), 0.0, 0.0)), InvalidInput);
}

TEST(StochasticMatrix, RowsMustSumToOne) {
  EXPECT_NO_THROW(StochasticMatrix(mat2(0.9, 0.1, 0.2, 0.8)));
  EXPECT_THROW(StochasticMatrix(mat2(0.9, 0.2, 0.2, 0.8)), InvalidInput);
}

TEST(SupNorm, MaxAbsoluteRowSum) {
  EXPECT_DOUBLE_EQ(sup_operator_norm(mat2(1.0, -2.0, 0.5, 0.5)), 3.0);
}

TEST(SpectralRadius, Scalar) {
  const auto c = spectral_radius(NonnegativeMatrix(Eigen::MatrixXd::Constant(1, 1, 0.5)));
  EXPECT_DOUBLE_EQ(c.rho, 0.5);
}

TEST(SpectralRadius, Nilpotent) {
  const NonnegativeMatrix b(mat2(0.0, 2.0, 0.0, 0.0));
  EXPECT_EQ(spectral_radius(b).rho, 0.0);
  EXPECT_DOUBLE_EQ(gelfand_estimate(b, 1).value, 2.0);
  EXPECT_EQ(gelfand_estimate(b, 2).value, 0.0);
  EXPECT_EQ(gelfand_estimate(b, 256).value, 0.0);
}

TEST(SpectralRadius, StochasticIsOne) {
  EXPECT_NEAR(spectral_radius(NonnegativeMatrix(mat2(0.9, 0.1, 0.2, 0.8))).rho, 1.0, 1e-10);
}

TEST(SpectralRadius, PeriodicMatrix) {
  // Eigenvalues +-sqrt(0.6): plain power iteration would oscillate.
  const auto c = spectral_radius(NonnegativeMatrix(mat2(0.0, 1.2, 0.5, 0.0)));
  EXPECT_NEAR(c.rho, 0.7745966692414834, 1e-12);
}

TEST(SpectralRadius, ReducibleTakesLargestBlock) {
  const auto c = spectral_radius(NonnegativeMatrix(mat2(0.3, 1.0, 0.0, 0.8)));
  EXPECT_NEAR(c.rho, 0.8, 1e-14);
}

TEST(SpectralRadius, AgreesWithEigensolverOnRandomMatrices) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index n = 1 + t % 10;
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = u(rng) < 0.3 ? 0.0 : u(rng);
    const double expected = Eigen::EigenSolver<Eigen::MatrixXd>(m).eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_NEAR(spectral_radius(NonnegativeMatrix(m)).rho, expected, 1e-9) << "trial " << t;
  }
}

TEST(SpectralRadius, Homogeneous) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto b = testing::random_with_radius(rng, 7, 0.8);
    const double r = spectral_radius(b).rho;
    EXPECT_NEAR(spectral_radius(NonnegativeMatrix(2.5 * b.matrix())).rho, 2.5 * r, 1e-10);
    EXPECT_LE(r, sup_operator_norm(b.matrix()) + 1e-12);
  }
}

TEST(SpectralRadius, ZeroMatrix) {
  EXPECT_EQ(spectral_radius(NonnegativeMatrix::zero(3)).rho, 0.0);
  EXPECT_THROW(left_perron_vector(NonnegativeMatrix::zero(3)), NotIrreducible);
}

TEST(Irreducibility, Components) {
  EXPECT_TRUE(is_irreducible(NonnegativeMatrix(mat2(0.0, 1.0, 1.0, 0.0))));
  EXPECT_FALSE(is_irreducible(NonnegativeMatrix(mat2(0.5, 1.0, 0.0, 0.5))));
  EXPECT_FALSE(is_irreducible(NonnegativeMatrix(Eigen::MatrixXd::Zero(1, 1))));
  EXPECT_EQ(strongly_connected_components<double>(mat2(0.5, 1.0, 0.0, 0.5)).size(), 2u);
}

TEST(Gelfand, ConvergesToRadius) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> target(0.1, 2.0);
  for (int t = 0; t < 40; ++t) {
    const double rho = target(rng);
    const auto b = testing::random_discount_matrix(rng, 1 + t % 10, rho);
    // Relative: the gap grows linearly in rho.
    EXPECT_NEAR(gelfand_estimate(b, 256).value / rho, 1.0, 1e-3) << "trial " << t;
    EXPECT_GE(gelfand_estimate(b, 1).value, rho - 1e-12);
  }
}

TEST(Gelfand, SlowForUnbalancedMatrices) {
  // ||B^n||^(1/n) - rho behaves like rho log(C) / n, where C is the sup norm
  // of the Perron projector; dense uniform matrices need a longer horizon.
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto b = testing::random_with_radius(rng, 1 + t % 10, 0.9);
    EXPECT_NEAR(gelfand_estimate(b, 1 << 14).value, 0.9, 1e-4) << "trial " << t;
  }
}

TEST(Gelfand, PeriodicMatrix) {
  EXPECT_NEAR(gelfand_estimate(NonnegativeMatrix(mat2(0.0, 1.2, 0.5, 0.0)), 64).value, std::sqrt(0.6), 1e-3);
}

TEST(Gelfand, Identity) {
  EXPECT_DOUBLE_EQ(gelfand_estimate(NonnegativeMatrix(Eigen::MatrixXd::Identity(3, 3)), 77).value, 1.0);
}

TEST(Gelfand, OverflowIsFlagged) {
  const NonnegativeMatrix b(Eigen::MatrixXd::Constant(2, 2, 1e300));
  const auto g = gelfand_estimate(b, 1);
  EXPECT_TRUE(std::isfinite(g.value));
  EXPECT_FALSE(g.overflow);
}

TEST(Gelfand, LargeEntriesDoNotOverflow) {
  const NonnegativeMatrix b(Eigen::MatrixXd::Constant(2, 2, 1e200));
  const auto g = gelfand_estimate(b, 256);
  EXPECT_FALSE(g.overflow);
  EXPECT_NEAR(g.value / 2e200, 1.0, 1e-10);
}

TEST(Gelfand, RejectsNonPositiveN) {
  EXPECT_THROW(gelfand_estimate(NonnegativeMatrix(mat2(0.1, 0, 0, 0.1)), 0), InvalidInput);
}

TEST(Neumann, FrozenInverse) {
  const Eigen::MatrixXd inv = neumann_inverse(NonnegativeMatrix(mat2(0.55, 0.1, 0.55, 0.1)));
  const Eigen::MatrixXd expected = mat2(0.9, 0.1, 0.55, 0.45) / 0.35;
  EXPECT_LT((inv - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Neumann, SmallCases) {
  EXPECT_TRUE(neumann_inverse(NonnegativeMatrix::zero(3)).isIdentity());
  EXPECT_DOUBLE_EQ(neumann_inverse(NonnegativeMatrix(Eigen::MatrixXd::Constant(1, 1, 0.5)))(0, 0), 2.0);
}

TEST(Neumann, InvertsIMinusB) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto b = testing::random_discount_matrix(rng, 8, 0.97);
    const Eigen::MatrixXd prod = neumann_inverse(b) * (Eigen::MatrixXd::Identity(8, 8) - b.matrix());
    EXPECT_LT((prod - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Neumann, DivergesAtUnitRadius) {
  try {
    neumann_inverse(NonnegativeMatrix(mat2(0.9, 0.1, 0.2, 0.8)));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NEAR(e.certificate().rho, 1.0, 1e-10);
  }
}

TEST(Neumann, NonnegativeAndAtLeastIdentity) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    const auto b = testing::random_with_radius(rng, 6, 0.95);
    const Eigen::MatrixXd inv = neumann_inverse(b);
    EXPECT_GE((inv - Eigen::MatrixXd::Identity(6, 6)).minCoeff(), -1e-12);
  }
}

TEST(Perron, FrozenVector) {
  const auto pv = left_perron_vector(NonnegativeMatrix(mat2(0.0, 1.2, 0.5, 0.0)));
  const double rho = std::sqrt(0.6);
  EXPECT_NEAR(pv.rho, rho, 1e-10);
  EXPECT_NEAR(pv.u(0), 0.5 / (0.5 + rho), 1e-9);
  EXPECT_NEAR(pv.u(1), rho / (0.5 + rho), 1e-9);
}

TEST(Perron, DoublyStochasticIsUniform) {
  Eigen::MatrixXd m(3, 3);
  m << 0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2;
  const auto pv = left_perron_vector(NonnegativeMatrix(m));
  EXPECT_LT((pv.u - Eigen::VectorXd::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(pv.residual, 1e-10);
}

TEST(Perron, RequiresIrreducible) {
  EXPECT_THROW(left_perron_vector(NonnegativeMatrix(mat2(0.5, 1.0, 0.0, 0.5))), NotIrreducible);
}

TEST(Perron, FloatScalar) {
  Eigen::MatrixXf m(2, 2);
  m << 0.5f, 0.5f, 0.25f, 0.75f;
  const auto c = spectral_radius(BasicNonnegativeMatrix<float>(m));
  EXPECT_NEAR(c.rho, 1.0, 1e-5);
}

}  // namespace
}  // namespace perov
