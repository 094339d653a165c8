#include "perov/sampling.hpp"

#include <cmath>

#include "perov/mc_oracle.hpp"

namespace perov {

namespace {

GridFunction uniform_matrix(PathRng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  GridFunction g(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = lo + (hi - lo) * rng.uniform();
  return g;
}

}  // namespace

std::vector<GridFunction> sample_grid_functions(Eigen::Index rows, Eigen::Index cols, std::size_t count, double scale,
                                                std::uint64_t seed) {
  std::vector<GridFunction> out;
  for (std::size_t k = 0; k < count; ++k) {
    PathRng rng(seed, k);
    out.push_back(uniform_matrix(rng, rows, cols, -scale, scale));
  }
  return out;
}

std::vector<GridFunction> sample_nonnegative(Eigen::Index rows, Eigen::Index cols, std::size_t count, double scale,
                                             std::uint64_t seed) {
  std::vector<GridFunction> out;
  for (std::size_t k = 0; k < count; ++k) {
    PathRng rng(seed, k);
    out.push_back(uniform_matrix(rng, rows, cols, 0.0, scale));
  }
  return out;
}

std::vector<Eigen::VectorXd> sample_constants(Eigen::Index dim, std::size_t count, double scale, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t k = 0; k < count; ++k) {
    PathRng rng(seed, k);
    out.push_back(uniform_matrix(rng, dim, 1, 0.0, scale).col(0));
  }
  return out;
}

std::vector<GridFunction> sample_savings_candidates(const SavingsModel& model, std::size_t count, std::uint64_t seed) {
  std::vector<GridFunction> out;
  const auto& grid = model.asset_grid();
  for (std::size_t k = 0; k < count; ++k) {
    PathRng rng(seed, k);
    GridFunction f(model.states(), model.grid_size());
    for (int i = 0; i < model.states(); ++i) {
      const double s = 0.05 + 0.95 * rng.uniform();
      const double t = rng.uniform();
      for (int m = 0; m < model.grid_size(); ++m) {
        const double a = grid[m];
        f(i, m) = model.utility().marginal(std::min(a, s * a + t * (1.0 - std::exp(-a))));
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<GridFunction> sample_savings_perturbations(const SavingsModel& model, std::size_t count, double scale,
                                                       std::uint64_t seed) {
  std::vector<GridFunction> out;
  const auto& z = model.marginal_grid();
  for (std::size_t k = 0; k < count; ++k) {
    PathRng rng(seed, k);
    GridFunction h(model.states(), model.grid_size());
    for (int i = 0; i < model.states(); ++i) {
      const double r = scale * rng.uniform();
      const double q = scale * rng.uniform();
      for (int m = 0; m < model.grid_size(); ++m) h(i, m) = r * z[m] / z.front() + q;
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace perov
