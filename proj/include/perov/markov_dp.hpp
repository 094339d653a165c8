#pragma once

// Finite Markov dynamic programming with transition-dependent discount
// factors beta_ij. Solved as a Perov contraction with coefficient matrix
// B = (p_ij beta_ij); individual beta_ij may exceed one.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "perov/ndmatrix.hpp"
#include "perov/perov_core.hpp"

namespace perov {

/// Greedy or user-supplied decision rule: choice(i, x) is an index into the
/// control grid.
struct Policy {
  Eigen::MatrixXi choice;
};

class DPModel {
 public:
  /// Dense-table constructor.
  ///
  /// `feasible[i][x]` lists admissible control indices, `utility[i]` is an
  /// (nX x nY) table (entries outside the feasible set are ignored and may be
  /// NaN), `motion` is flattened as ((i * I + j) * nX + x) * nY + y and holds
  /// next-period grid indices.
  DPModel(StochasticMatrix p, NonnegativeMatrix beta, std::vector<double> x_grid, std::vector<double> y_grid,
          std::vector<std::vector<std::vector<int>>> feasible, std::vector<Eigen::MatrixXd> utility,
          std::vector<int> motion, std::string projection = {});

  /// Builds the tables from callables. Next states returned by `motion` are
  /// snapped to the nearest x grid point; when any value moves, the model's
  /// projection note records it.
  static DPModel from_functions(StochasticMatrix p, NonnegativeMatrix beta, std::vector<double> x_grid,
                                std::vector<double> y_grid,
                                const std::function<bool(int, double, double)>& feasible,
                                const std::function<double(int, double, double)>& utility,
                                const std::function<double(int, int, double, double)>& motion);

  int states() const noexcept { return static_cast<int>(p_.size()); }
  int grid_size() const noexcept { return static_cast<int>(x_grid_.size()); }
  int control_size() const noexcept { return static_cast<int>(y_grid_.size()); }

  const StochasticMatrix& transition() const noexcept { return p_; }
  const NonnegativeMatrix& discount_factors() const noexcept { return beta_; }
  const std::vector<double>& x_grid() const noexcept { return x_grid_; }
  const std::vector<double>& y_grid() const noexcept { return y_grid_; }
  const std::vector<int>& feasible(int i, int x) const { return feasible_[i][x]; }
  double utility(int i, int x, int y) const { return utility_[i](x, y); }
  const Eigen::MatrixXd& utility_table(int i) const { return utility_[i]; }
  int next_state(int i, int j, int x, int y) const {
    return motion_[((static_cast<std::size_t>(i) * states() + j) * grid_size() + x) * control_size() + y];
  }
  const std::vector<int>& motion_table() const noexcept { return motion_; }
  const std::string& projection() const noexcept { return projection_; }

  /// max |u_i(x, y)| over feasible triples.
  double utility_bound() const noexcept { return utility_bound_; }

 private:
  StochasticMatrix p_;
  NonnegativeMatrix beta_;
  std::vector<double> x_grid_;
  std::vector<double> y_grid_;
  std::vector<std::vector<std::vector<int>>> feasible_;
  std::vector<Eigen::MatrixXd> utility_;
  std::vector<int> motion_;
  std::string projection_;
  double utility_bound_ = 0.0;
};

/// B = (p_ij beta_ij).
NonnegativeMatrix discount_matrix(const DPModel& model);

/// (TV)_i(x) = max_{y in Gamma_i(x)} u_i(x, y) + sum_j p_ij beta_ij V_j(g_ij(x, y)).
GridFunction bellman_operator(const DPModel& model, const GridFunction& v);

/// Argmax of the Bellman bracket, ties to the lowest control index.
Policy greedy_policy(const DPModel& model, const GridFunction& v);

struct DPSolveOptions {
  double tol = 1e-10;
  int max_iterations = 100000;
  std::optional<GridFunction> initial;  // defaults to V = 0
};

struct DPSolution {
  GridFunction value;
  Policy policy;
  ConvergenceReport report;
  SpectralCertificate spectral;
};

/// Perov iteration of the Bellman operator. Throws DivergenceError if rho(B) >= 1.
DPSolution solve_dp(const DPModel& model, const DPSolveOptions& opt = {});

/// Value of following `policy` forever: the fixed point of the policy-restricted
/// recursion, by dense linear solve for small systems and Perov iteration
/// (tolerance `tol`) otherwise.
GridFunction policy_value(const DPModel& model, const Policy& policy, double tol = 1e-10);

}  // namespace perov
