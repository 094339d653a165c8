#pragma once

// Optimal savings with Markov-modulated discounting, returns and income.
//
// Candidates are marginal-utility functions f_i(a) = u'(c(a, i)) stored on an
// asset grid (rows = Markov states, columns = grid points). The time iteration
// operator updates each f_i(a) through the Euler equation
//
//   u'(xi) = min{ max{ E_i[beta R f_j(R (a - xi) + Y)], u'(a) }, u'(0) },
//
// solved for xi in [0, a] by bisection, and is a generalized contraction with
// b_ij = p_ij E[beta(i, j, zeta) R(i, j, zeta)].
//
// Off-grid evaluation of f_i is piecewise linear in z = u'(a) between grid
// points, and f_i(a) = f_i(a_edge) * u'(a) / u'(a_edge) outside the grid
// (constant c/a ratio for CRRA utility).

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "perov/ndmatrix.hpp"
#include "perov/perov_core.hpp"

namespace perov {

class UtilitySpec {
 public:
  /// u(c) = c^{1-gamma} / (1-gamma) (log for gamma = 1), u'(c) = c^{-gamma}.
  static UtilitySpec crra(double gamma);

  /// General utility. `marginal` must be positive and strictly decreasing on
  /// (0, inf) with `inverse_marginal` its inverse; both are spot-checked.
  /// When `infinite_at_zero` is false, u'(0) is taken as u'(1e-12).
  UtilitySpec(std::function<double(double)> level, std::function<double(double)> marginal,
              std::function<double(double)> inverse_marginal, bool infinite_at_zero);

  double level(double c) const { return level_(c); }
  double marginal(double c) const { return marginal_(c); }
  double inverse_marginal(double m) const { return inverse_(m); }
  /// u'(0): +inf when the marginal is unbounded at zero.
  double marginal_at_zero() const noexcept { return marginal_zero_; }
  std::optional<double> crra_gamma() const noexcept { return gamma_; }

 private:
  UtilitySpec() = default;
  void validate() const;

  std::function<double(double)> level_;
  std::function<double(double)> marginal_;
  std::function<double(double)> inverse_;
  double marginal_zero_ = 0.0;
  std::optional<double> gamma_;
};

/// Finite-support i.i.d. shock.
struct ShockDistribution {
  std::vector<double> support;
  std::vector<double> weights;

  void validate() const;
  std::size_t size() const noexcept { return support.size(); }
};

std::vector<double> geometric_grid(double min, double max, int points);
std::vector<double> linear_grid(double min, double max, int points);

class SavingsModel {
 public:
  /// Tables are flattened as (i * I + j) * K + k for transition i -> j and
  /// shock index k; all entries must be nonnegative and finite.
  SavingsModel(StochasticMatrix p, ShockDistribution shocks, std::vector<double> beta, std::vector<double> returns,
               std::vector<double> income, UtilitySpec utility, std::vector<double> asset_grid);

  int states() const noexcept { return static_cast<int>(p_.size()); }
  int shock_count() const noexcept { return static_cast<int>(shocks_.size()); }
  int grid_size() const noexcept { return static_cast<int>(grid_.size()); }

  const StochasticMatrix& transition() const noexcept { return p_; }
  const ShockDistribution& shocks() const noexcept { return shocks_; }
  const UtilitySpec& utility() const noexcept { return utility_; }
  const std::vector<double>& asset_grid() const noexcept { return grid_; }
  /// u'(a) at each grid point: the interpolation abscissa.
  const std::vector<double>& marginal_grid() const noexcept { return z_; }

  double beta(int i, int j, int k) const { return beta_[index(i, j, k)]; }
  double ret(int i, int j, int k) const { return ret_[index(i, j, k)]; }
  double income(int i, int j, int k) const { return income_[index(i, j, k)]; }
  const std::vector<double>& beta_table() const noexcept { return beta_; }
  const std::vector<double>& return_table() const noexcept { return ret_; }
  const std::vector<double>& income_table() const noexcept { return income_; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * states() + j) * shock_count() + k;
  }

  StochasticMatrix p_;
  ShockDistribution shocks_;
  std::vector<double> beta_;
  std::vector<double> ret_;
  std::vector<double> income_;
  UtilitySpec utility_;
  std::vector<double> grid_;
  std::vector<double> z_;
};

/// b_ij = p_ij sum_k w_k beta(i, j, k) R(i, j, k).
NonnegativeMatrix contraction_matrix(const SavingsModel& model);

/// True when some income draw lies below the smallest grid point, so next
/// period wealth can leave the grid from below.
bool below_grid_income(const SavingsModel& model);

/// f_i evaluated at an arbitrary wealth level a >= 0.
double marginal_at(const SavingsModel& model, const GridFunction& f, int i, double a);

/// The clipped right-hand side of the Euler equation at (i, a) for a
/// consumption choice xi.
double euler_rhs(const SavingsModel& model, const GridFunction& f, int i, double a, double xi);

struct EulerOptions {
  double bisection_tol = 1e-12;  // bracket width relative to a
};

/// One application of the time iteration operator in marginal-utility space.
GridFunction euler_update(const SavingsModel& model, const GridFunction& f, const EulerOptions& opt = {});

/// u'(c) - clipped Euler right-hand side, per grid point, using f = u'(c).
GridFunction euler_residuals(const SavingsModel& model, const GridFunction& f);

GridFunction consumption_to_marginal(const SavingsModel& model, const GridFunction& c);
GridFunction marginal_to_consumption(const SavingsModel& model, const GridFunction& f);

/// Consumption at arbitrary wealth implied by a grid consumption rule, using
/// the same marginal-utility interpolant as the solver; clipped to [0, a].
class ConsumptionRule {
 public:
  ConsumptionRule(const SavingsModel& model, const GridFunction& c);
  double operator()(int i, double a) const;

 private:
  const SavingsModel* model_;
  GridFunction f_;
};

struct SavingsSolveOptions {
  double tol = 1e-8;
  int max_iterations = 100000;
  EulerOptions euler;
  std::optional<GridFunction> initial_consumption;  // defaults to c(a, i) = a
};

struct SavingsSolution {
  GridFunction consumption;
  GridFunction marginal;
  GridFunction euler_residual;
  ConvergenceReport report;
  SpectralCertificate spectral;
};

/// Perov iteration of euler_update under the row-sup metric; DivergenceError
/// if rho(B) >= 1.
SavingsSolution solve_savings(const SavingsModel& model, const SavingsSolveOptions& opt = {});

}  // namespace perov
