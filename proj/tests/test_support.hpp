#pragma once

#include <Eigen/Dense>

#include <random>
#include <string>

#include "perov/asset_pricing.hpp"
#include "perov/markov_dp.hpp"
#include "perov/ndmatrix.hpp"

namespace perov::testing {

inline std::string fixture(const std::string& name) { return std::string(PEROV_FIXTURES) + "/" + name; }

/// Uniform nonnegative I x I matrix rescaled to spectral radius `rho`.
inline NonnegativeMatrix random_with_radius(std::mt19937_64& rng, Eigen::Index n, double rho) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = u(rng);
  const double current = spectral_radius(NonnegativeMatrix(m)).rho;
  return NonnegativeMatrix(m * (rho / current));
}

inline StochasticMatrix random_stochastic(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = u(rng);
    m.row(r) /= m.row(r).sum();
  }
  return StochasticMatrix(m);
}

/// B = (p_ij beta_ij) with P random stochastic and beta_ij in [0.5, 1.2],
/// rescaled to radius `rho`. Some beta_ij exceed one.
inline NonnegativeMatrix random_discount_matrix(std::mt19937_64& rng, Eigen::Index n, double rho) {
  const StochasticMatrix p = random_stochastic(rng, n);
  std::uniform_real_distribution<double> u(0.5, 1.2);
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) b(r, c) = p(r, c) * u(rng);
  return NonnegativeMatrix(b * (rho / spectral_radius(NonnegativeMatrix(b)).rho));
}

/// P rows (0.5, 0.5), beta rows (1.1, 0.2), u = 1 on a two-point grid where
/// the control picks next period's grid point. V* = 1 / 0.35.
inline DPModel two_state_dp() {
  Eigen::MatrixXd p(2, 2), beta(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  beta << 1.1, 0.2, 1.1, 0.2;
  return DPModel::from_functions(
      StochasticMatrix(p), NonnegativeMatrix(beta), {0.0, 1.0}, {0.0, 1.0}, [](int, double, double) { return true; },
      [](int, double, double) { return 1.0; }, [](int, int, double, double y) { return y; });
}

/// A random 5-state asset model with rho(B) <= 0.98.
inline AssetModel random_asset(std::mt19937_64& rng, double rho) {
  const StochasticMatrix p = random_stochastic(rng, 5);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  Eigen::MatrixXd m(5, 5), g(5, 5);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) {
      m(r, c) = u(rng);
      g(r, c) = u(rng);
    }
  const Eigen::MatrixXd b = p.matrix().cwiseProduct(m).cwiseProduct(g);
  m *= rho / spectral_radius(NonnegativeMatrix(b)).rho;
  return AssetModel(p, m, g);
}

}  // namespace perov::testing
