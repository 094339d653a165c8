#include "perov/markov_dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "perov/detail/parallel.hpp"

namespace perov {

namespace {

int nearest_index(const std::vector<double>& grid, double v) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), v);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return static_cast<int>(grid.size()) - 1;
  const auto hi = static_cast<int>(it - grid.begin());
  return (v - grid[hi - 1] <= grid[hi] - v) ? hi - 1 : hi;
}

void check_grid(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw InvalidInput(std::string(name) + " grid is empty");
  for (double v : g)
    if (!std::isfinite(v)) throw InvalidInput(std::string(name) + " grid has a non-finite value");
}

// Bellman bracket maximisation at one (i, x); returns the value and fills `arg`.
double maximise(const DPModel& m, const Eigen::MatrixXd& b, const GridFunction& v, int i, int x, int& arg) {
  double best = -std::numeric_limits<double>::infinity();
  arg = -1;
  for (int y : m.feasible(i, x)) {
    double val = m.utility(i, x, y);
    for (int j = 0; j < m.states(); ++j) {
      if (b(i, j) != 0.0) val += b(i, j) * v(j, m.next_state(i, j, x, y));
    }
    if (val > best) {
      best = val;
      arg = y;
    }
  }
  if (arg < 0) throw ModelError("empty feasible set");
  return best;
}

void check_value_shape(const DPModel& m, const GridFunction& v) {
  if (v.rows() != m.states() || v.cols() != m.grid_size()) {
    throw InvalidInput("value function must be " + std::to_string(m.states()) + "x" +
                       std::to_string(m.grid_size()));
  }
  if (!v.allFinite()) throw InvalidInput("value function has non-finite entries");
}

}  // namespace

DPModel::DPModel(StochasticMatrix p, NonnegativeMatrix beta, std::vector<double> x_grid, std::vector<double> y_grid,
                 std::vector<std::vector<std::vector<int>>> feasible, std::vector<Eigen::MatrixXd> utility,
                 std::vector<int> motion, std::string projection)
    : p_(std::move(p)),
      beta_(std::move(beta)),
      x_grid_(std::move(x_grid)),
      y_grid_(std::move(y_grid)),
      feasible_(std::move(feasible)),
      utility_(std::move(utility)),
      motion_(std::move(motion)),
      projection_(std::move(projection)) {
  const int ni = states();
  if (beta_.size() != ni) throw InvalidInput("beta must match the transition matrix dimension");
  check_grid(x_grid_, "x");
  check_grid(y_grid_, "y");
  const int nx = grid_size();
  const int ny = control_size();

  if (static_cast<int>(feasible_.size()) != ni) throw InvalidInput("feasible table needs one entry per state");
  if (static_cast<int>(utility_.size()) != ni) throw InvalidInput("utility table needs one entry per state");
  if (motion_.size() != static_cast<std::size_t>(ni) * ni * nx * ny) {
    throw InvalidInput("motion table must have I*I*nX*nY entries");
  }
  for (int i = 0; i < ni; ++i) {
    if (static_cast<int>(feasible_[i].size()) != nx) throw InvalidInput("feasible table needs one entry per x");
    if (utility_[i].rows() != nx || utility_[i].cols() != ny) throw InvalidInput("utility table must be nX x nY");
    for (int x = 0; x < nx; ++x) {
      auto& ys = feasible_[i][x];
      if (ys.empty()) {
        throw ModelError("empty feasible set at state " + std::to_string(i) + ", x index " + std::to_string(x));
      }
      std::sort(ys.begin(), ys.end());
      ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
      for (int y : ys) {
        if (y < 0 || y >= ny) throw InvalidInput("feasible control index out of range");
        const double u = utility_[i](x, y);
        if (!std::isfinite(u)) throw ModelError("utility must be finite on the feasible set");
        utility_bound_ = std::max(utility_bound_, std::abs(u));
      }
    }
  }
  for (int g : motion_)
    if (g < 0 || g >= nx) throw InvalidInput("motion table entry is not an x grid index");
}

DPModel DPModel::from_functions(StochasticMatrix p, NonnegativeMatrix beta, std::vector<double> x_grid,
                                std::vector<double> y_grid, const std::function<bool(int, double, double)>& feasible,
                                const std::function<double(int, double, double)>& utility,
                                const std::function<double(int, int, double, double)>& motion) {
  const int ni = static_cast<int>(p.size());
  const int nx = static_cast<int>(x_grid.size());
  const int ny = static_cast<int>(y_grid.size());
  std::vector<double> sorted = x_grid;
  std::sort(sorted.begin(), sorted.end());

  std::vector<std::vector<std::vector<int>>> feas(ni, std::vector<std::vector<int>>(nx));
  std::vector<Eigen::MatrixXd> util(ni, Eigen::MatrixXd::Constant(nx, ny, std::numeric_limits<double>::quiet_NaN()));
  std::vector<int> mot(static_cast<std::size_t>(ni) * ni * nx * ny, 0);
  double max_shift = 0.0;

  for (int i = 0; i < ni; ++i) {
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) {
        if (!feasible(i, x_grid[x], y_grid[y])) continue;
        feas[i][x].push_back(y);
        util[i](x, y) = utility(i, x_grid[x], y_grid[y]);
      }
      for (int j = 0; j < ni; ++j) {
        for (int y = 0; y < ny; ++y) {
          const double next = motion(i, j, x_grid[x], y_grid[y]);
          const double snapped = sorted[nearest_index(sorted, next)];
          max_shift = std::max(max_shift, std::abs(snapped - next));
          const auto pos = std::find(x_grid.begin(), x_grid.end(), snapped) - x_grid.begin();
          mot[((static_cast<std::size_t>(i) * ni + j) * nx + x) * ny + y] = static_cast<int>(pos);
        }
      }
    }
  }
  std::string note;
  if (max_shift > 1e-12) {
    note = "nearest-grid-point projection of the law of motion (max shift " + std::to_string(max_shift) + ")";
  }
  return DPModel(std::move(p), std::move(beta), std::move(x_grid), std::move(y_grid), std::move(feas),
                 std::move(util), std::move(mot), std::move(note));
}

NonnegativeMatrix discount_matrix(const DPModel& model) {
  return NonnegativeMatrix(model.transition().matrix().cwiseProduct(model.discount_factors().matrix()));
}

GridFunction bellman_operator(const DPModel& model, const GridFunction& v) {
  check_value_shape(model, v);
  const Eigen::MatrixXd b = discount_matrix(model).matrix();
  const int nx = model.grid_size();
  GridFunction out(model.states(), nx);
  detail::parallel_for(static_cast<long>(model.states()) * nx, [&](long k) {
    const int i = static_cast<int>(k / nx);
    const int x = static_cast<int>(k % nx);
    int arg = 0;
    out(i, x) = maximise(model, b, v, i, x, arg);
  });
  return out;
}

Policy greedy_policy(const DPModel& model, const GridFunction& v) {
  check_value_shape(model, v);
  const Eigen::MatrixXd b = discount_matrix(model).matrix();
  Policy pol{Eigen::MatrixXi(model.states(), model.grid_size())};
  for (int i = 0; i < model.states(); ++i) {
    for (int x = 0; x < model.grid_size(); ++x) {
      int arg = 0;
      maximise(model, b, v, i, x, arg);
      pol.choice(i, x) = arg;
    }
  }
  return pol;
}

DPSolution solve_dp(const DPModel& model, const DPSolveOptions& opt) {
  const NonnegativeMatrix b = discount_matrix(model);
  DPSolution sol;
  sol.spectral = spectral_radius(b);
  GridFunction v0 = opt.initial.value_or(GridFunction::Zero(model.states(), model.grid_size()));
  check_value_shape(model, v0);

  auto op = [&model](const GridFunction& v) { return bellman_operator(model, v); };
  auto fp = perov_iterate(op, std::move(v0), RowSupMetric{}, b, PerovOptions{opt.tol, opt.max_iterations, false});
  sol.value = std::move(fp.point);
  sol.report = std::move(fp.report);
  sol.policy = greedy_policy(model, sol.value);
  return sol;
}

GridFunction policy_value(const DPModel& model, const Policy& policy, double tol) {
  const int ni = model.states();
  const int nx = model.grid_size();
  if (policy.choice.rows() != ni || policy.choice.cols() != nx) throw InvalidInput("policy has the wrong shape");
  for (int i = 0; i < ni; ++i) {
    for (int x = 0; x < nx; ++x) {
      const auto& ys = model.feasible(i, x);
      if (!std::binary_search(ys.begin(), ys.end(), policy.choice(i, x))) {
        throw InvalidInput("policy picks an infeasible control at state " + std::to_string(i));
      }
    }
  }
  const NonnegativeMatrix b = discount_matrix(model);
  const SpectralCertificate cert = spectral_radius(b);
  if (!(cert.rho < 1.0)) throw DivergenceError("policy value undefined: rho(B) >= 1", cert);

  const Eigen::MatrixXd& bm = b.matrix();
  const long n = static_cast<long>(ni) * nx;
  if (n <= 2000) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < ni; ++i) {
      for (int x = 0; x < nx; ++x) {
        const int y = policy.choice(i, x);
        const long s = static_cast<long>(i) * nx + x;
        rhs(s) = model.utility(i, x, y);
        for (int j = 0; j < ni; ++j) a(s, static_cast<long>(j) * nx + model.next_state(i, j, x, y)) -= bm(i, j);
      }
    }
    const Eigen::VectorXd sol = a.partialPivLu().solve(rhs);
    GridFunction out(ni, nx);
    for (int i = 0; i < ni; ++i)
      for (int x = 0; x < nx; ++x) out(i, x) = sol(static_cast<long>(i) * nx + x);
    return out;
  }

  auto op = [&](const GridFunction& v) {
    GridFunction tv(ni, nx);
    for (int i = 0; i < ni; ++i) {
      for (int x = 0; x < nx; ++x) {
        const int y = policy.choice(i, x);
        double val = model.utility(i, x, y);
        for (int j = 0; j < ni; ++j) val += bm(i, j) * v(j, model.next_state(i, j, x, y));
        tv(i, x) = val;
      }
    }
    return tv;
  };
  return perov_iterate(op, GridFunction(GridFunction::Zero(ni, nx)), RowSupMetric{}, b,
                       PerovOptions{tol, 1000000, false})
      .point;
}

}  // namespace perov
