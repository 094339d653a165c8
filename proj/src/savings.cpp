#include "perov/savings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "perov/detail/parallel.hpp"

namespace perov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCornerConsumption = 1e-12;

}  // namespace

// ---------------------------------------------------------------------------
// UtilitySpec

UtilitySpec UtilitySpec::crra(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("CRRA gamma must be positive");
  UtilitySpec u;
  u.gamma_ = gamma;
  if (gamma == 1.0) {
    u.level_ = [](double c) { return std::log(c); };
  } else {
    u.level_ = [gamma](double c) { return std::pow(c, 1.0 - gamma) / (1.0 - gamma); };
  }
  u.marginal_ = [gamma](double c) { return c > 0.0 ? std::pow(c, -gamma) : kInf; };
  u.inverse_ = [gamma](double m) { return std::isinf(m) ? 0.0 : std::pow(m, -1.0 / gamma); };
  u.marginal_zero_ = kInf;
  u.validate();
  return u;
}

UtilitySpec::UtilitySpec(std::function<double(double)> level, std::function<double(double)> marginal,
                         std::function<double(double)> inverse_marginal, bool infinite_at_zero)
    : level_(std::move(level)), marginal_(std::move(marginal)), inverse_(std::move(inverse_marginal)) {
  if (!level_ || !marginal_ || !inverse_) throw InvalidInput("utility spec needs level, marginal and inverse");
  marginal_zero_ = infinite_at_zero ? kInf : marginal_(kCornerConsumption);
  validate();
}

void UtilitySpec::validate() const {
  constexpr double probes[] = {1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};
  double prev = kInf;
  for (double c : probes) {
    const double m = marginal_(c);
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("marginal utility must be positive and finite on (0, inf)");
    if (!(m < prev)) throw InvalidInput("marginal utility must be strictly decreasing");
    prev = m;
    const double back = inverse_(m);
    if (std::abs(back - c) > 1e-10 * std::max(1.0, c)) {
      throw InvalidInput("inverse_marginal is not the inverse of marginal at c = " + std::to_string(c));
    }
  }
}

// ---------------------------------------------------------------------------
// Shocks and grids

void ShockDistribution::validate() const {
  if (support.empty()) throw InvalidInput("shock distribution needs at least one point");
  if (support.size() != weights.size()) throw InvalidInput("shock support and weights differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("shock weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("shock weights must sum to 1");
  for (double s : support)
    if (!std::isfinite(s)) throw InvalidInput("shock support must be finite");
}

std::vector<double> geometric_grid(double min, double max, int points) {
  if (!(min > 0.0) || !(max > min) || points < 2) throw InvalidInput("geometric grid needs 0 < min < max, points >= 2");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double ratio = std::log(max / min) / (points - 1);
  for (int k = 0; k < points; ++k) g[k] = min * std::exp(ratio * k);
  g.front() = min;
  g.back() = max;
  return g;
}

std::vector<double> linear_grid(double min, double max, int points) {
  if (!(min > 0.0) || !(max > min) || points < 2) throw InvalidInput("linear grid needs 0 < min < max, points >= 2");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) g[k] = min + (max - min) * k / (points - 1);
  g.back() = max;
  return g;
}

// ---------------------------------------------------------------------------
// SavingsModel

SavingsModel::SavingsModel(StochasticMatrix p, ShockDistribution shocks, std::vector<double> beta,
                           std::vector<double> returns, std::vector<double> income, UtilitySpec utility,
                           std::vector<double> asset_grid)
    : p_(std::move(p)),
      shocks_(std::move(shocks)),
      beta_(std::move(beta)),
      ret_(std::move(returns)),
      income_(std::move(income)),
      utility_(std::move(utility)),
      grid_(std::move(asset_grid)) {
  shocks_.validate();
  const std::size_t expected = static_cast<std::size_t>(states()) * states() * shock_count();
  auto check_table = [expected](const std::vector<double>& t, const char* name) {
    if (t.size() != expected) throw InvalidInput(std::string(name) + " table must have I*I*K entries");
    for (double v : t)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " entries must be nonnegative");
  };
  check_table(beta_, "beta");
  check_table(ret_, "R");
  check_table(income_, "Y");

  if (grid_.size() < 2) throw InvalidInput("asset grid needs at least two points");
  if (!(grid_.front() > 0.0)) throw InvalidInput("asset grid must be positive");
  for (std::size_t m = 1; m < grid_.size(); ++m)
    if (!(grid_[m] > grid_[m - 1])) throw InvalidInput("asset grid must be strictly increasing");
  z_.resize(grid_.size());
  for (std::size_t m = 0; m < grid_.size(); ++m) z_[m] = utility_.marginal(grid_[m]);
}

NonnegativeMatrix contraction_matrix(const SavingsModel& model) {
  const int n = model.states();
  const auto& w = model.shocks().weights;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double e = 0.0;
      for (int k = 0; k < model.shock_count(); ++k) e += w[k] * model.beta(i, j, k) * model.ret(i, j, k);
      b(i, j) = model.transition()(i, j) * e;
    }
  }
  return NonnegativeMatrix(std::move(b));
}

// ---------------------------------------------------------------------------
// Interpolation and the Euler operator

bool below_grid_income(const SavingsModel& model) {
  const double a_min = model.asset_grid().front();
  for (double y : model.income_table())
    if (y < a_min) return true;
  return false;
}

double marginal_at(const SavingsModel& model, const GridFunction& f, int i, double a) {
  const auto& grid = model.asset_grid();
  const auto& z = model.marginal_grid();
  const auto& u = model.utility();
  const int last = model.grid_size() - 1;

  // Off the grid f scales with u'(a), which is exact for homothetic rules
  // c = theta a. Above the grid the factor is below one, so the Euler
  // operator stays a contraction; below it the factor exceeds one and the
  // discretized operator need not contract (see below_grid_income).
  if (a <= grid.front()) return a == grid.front() ? f(i, 0) : f(i, 0) * (u.marginal(a) / z.front());
  if (a >= grid.back()) return a == grid.back() ? f(i, last) : f(i, last) * (u.marginal(a) / z.back());
  const auto hi = static_cast<int>(std::upper_bound(grid.begin(), grid.end(), a) - grid.begin());
  const int lo = hi - 1;
  const double t = (z[lo] - u.marginal(a)) / (z[lo] - z[hi]);
  return (1.0 - t) * f(i, lo) + t * f(i, hi);
}

double euler_rhs(const SavingsModel& model, const GridFunction& f, int i, double a, double xi) {
  const auto& w = model.shocks().weights;
  const auto& p = model.transition();
  double expectation = 0.0;
  for (int j = 0; j < model.states(); ++j) {
    if (p(i, j) == 0.0) continue;
    for (int k = 0; k < model.shock_count(); ++k) {
      const double weight = p(i, j) * w[k] * model.beta(i, j, k) * model.ret(i, j, k);
      if (weight == 0.0) continue;
      const double next = model.ret(i, j, k) * (a - xi) + model.income(i, j, k);
      expectation += weight * marginal_at(model, f, j, next);
    }
  }
  const auto& u = model.utility();
  return std::min(std::max(expectation, u.marginal(a)), u.marginal_at_zero());
}

namespace {

double solve_xi(const SavingsModel& model, const GridFunction& f, int i, double a, const EulerOptions& opt) {
  const auto& u = model.utility();
  // Corner xi = a: the clipped expectation already equals u'(a).
  if (euler_rhs(model, f, i, a, a) <= u.marginal(a)) return a;
  // Corner xi = 0 (reachable only with a finite u'(0)).
  if (std::isfinite(u.marginal_at_zero()) && euler_rhs(model, f, i, a, 0.0) >= u.marginal_at_zero()) return 0.0;

  double lo = 0.0;
  double hi = a;
  const double width = opt.bisection_tol * a;
  while (hi - lo > width) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gap = u.marginal(mid) - euler_rhs(model, f, i, a, mid);
    if (std::isnan(gap)) {
      throw NumericError("Euler equation root not bracketed at state " + std::to_string(i) +
                         ", a = " + std::to_string(a));
    }
    if (gap > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void check_candidate(const SavingsModel& model, const GridFunction& f) {
  if (f.rows() != model.states() || f.cols() != model.grid_size()) {
    throw InvalidInput("candidate must be " + std::to_string(model.states()) + "x" +
                       std::to_string(model.grid_size()));
  }
  if (!(f.minCoeff() > 0.0) || f.hasNaN()) throw InvalidInput("marginal utilities must be positive");
}

}  // namespace

GridFunction euler_update(const SavingsModel& model, const GridFunction& f, const EulerOptions& opt) {
  check_candidate(model, f);
  const int nm = model.grid_size();
  const auto& grid = model.asset_grid();
  GridFunction out(model.states(), nm);
  detail::parallel_for(static_cast<long>(model.states()) * nm, [&](long k) {
    const int i = static_cast<int>(k / nm);
    const int m = static_cast<int>(k % nm);
    const double a = grid[m];
    const double xi = solve_xi(model, f, i, a, opt);
    out(i, m) = xi == a ? model.marginal_grid()[m] : model.utility().marginal(xi);
  });
  return out;
}

GridFunction euler_residuals(const SavingsModel& model, const GridFunction& f) {
  check_candidate(model, f);
  GridFunction r(model.states(), model.grid_size());
  for (int i = 0; i < model.states(); ++i) {
    for (int m = 0; m < model.grid_size(); ++m) {
      const double a = model.asset_grid()[m];
      const double c = std::min(model.utility().inverse_marginal(f(i, m)), a);
      r(i, m) = f(i, m) - euler_rhs(model, f, i, a, c);
    }
  }
  return r;
}

GridFunction consumption_to_marginal(const SavingsModel& model, const GridFunction& c) {
  if (c.rows() != model.states() || c.cols() != model.grid_size()) throw InvalidInput("consumption has the wrong shape");
  GridFunction f(c.rows(), c.cols());
  for (int i = 0; i < model.states(); ++i) {
    for (int m = 0; m < model.grid_size(); ++m) {
      const double a = model.asset_grid()[m];
      const double ci = c(i, m);
      if (!(ci >= 0.0) || ci > a * (1.0 + 1e-12)) throw InvalidInput("consumption must lie in [0, a]");
      f(i, m) = ci == 0.0 ? model.utility().marginal_at_zero() : model.utility().marginal(std::min(ci, a));
    }
  }
  return f;
}

GridFunction marginal_to_consumption(const SavingsModel& model, const GridFunction& f) {
  if (f.rows() != model.states() || f.cols() != model.grid_size()) throw InvalidInput("candidate has the wrong shape");
  GridFunction c(f.rows(), f.cols());
  for (int i = 0; i < model.states(); ++i) {
    for (int m = 0; m < model.grid_size(); ++m) {
      if (!(f(i, m) > 0.0)) throw InvalidInput("marginal utilities must be positive");
      c(i, m) = std::isinf(f(i, m)) ? 0.0 : model.utility().inverse_marginal(f(i, m));
    }
  }
  return c;
}

ConsumptionRule::ConsumptionRule(const SavingsModel& model, const GridFunction& c) : model_(&model) {
  if (c.rows() != model.states() || c.cols() != model.grid_size()) throw InvalidInput("consumption has the wrong shape");
  f_.resize(c.rows(), c.cols());
  for (int i = 0; i < model.states(); ++i) {
    for (int m = 0; m < model.grid_size(); ++m) {
      const double cm = c(i, m);
      if (!(cm >= 0.0)) throw InvalidInput("consumption must be nonnegative");
      f_(i, m) = cm > 0.0 ? model.utility().marginal(cm) : model.utility().marginal_at_zero();
    }
  }
}

double ConsumptionRule::operator()(int i, double a) const {
  if (!(a > 0.0)) return 0.0;
  const double f = marginal_at(*model_, f_, i, a);
  const double c = std::isinf(f) ? 0.0 : model_->utility().inverse_marginal(f);
  return std::clamp(c, 0.0, a);
}

SavingsSolution solve_savings(const SavingsModel& model, const SavingsSolveOptions& opt) {
  const NonnegativeMatrix b = contraction_matrix(model);
  SavingsSolution sol;
  sol.spectral = spectral_radius(b);
  if (!(sol.spectral.rho < 1.0)) {
    throw DivergenceError("time iteration is not a generalized contraction: rho(B) = " +
                              std::to_string(sol.spectral.rho) + " >= 1",
                          sol.spectral);
  }

  GridFunction f0;
  if (opt.initial_consumption) {
    f0 = consumption_to_marginal(model, *opt.initial_consumption);
  } else {
    f0.resize(model.states(), model.grid_size());
    for (int i = 0; i < model.states(); ++i)
      for (int m = 0; m < model.grid_size(); ++m) f0(i, m) = model.marginal_grid()[m];
  }

  auto op = [&](const GridFunction& f) { return euler_update(model, f, opt.euler); };
  auto fp = perov_iterate(op, std::move(f0), RowSupMetric{}, b, PerovOptions{opt.tol, opt.max_iterations, false});
  sol.marginal = std::move(fp.point);
  sol.report = std::move(fp.report);
  sol.consumption = marginal_to_consumption(model, sol.marginal);
  sol.euler_residual = euler_residuals(model, sol.marginal);
  return sol;
}

}  // namespace perov
