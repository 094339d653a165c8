#include "perov/mc_oracle.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "perov/detail/parallel.hpp"

namespace perov {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) : engine_(splitmix64(seed ^ splitmix64(path + 1))) {}

double PathRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int PathRng::categorical(const double* probs, int n) {
  const double u = uniform();
  double cum = 0.0;
  int last_positive = 0;
  for (int k = 0; k < n; ++k) {
    if (probs[k] <= 0.0) continue;
    cum += probs[k];
    last_positive = k;
    if (u < cum) return k;
  }
  return last_positive;
}

void SimulationConfig::validate() const {
  if (n_paths < 1) throw InvalidInput("simulation needs n_paths >= 1");
  if (horizon < 1) throw InvalidInput("simulation needs horizon >= 1");
}

double geometric_tail(const NonnegativeMatrix& b, int horizon) {
  if (!(spectral_radius(b).rho < 1.0)) return std::numeric_limits<double>::infinity();
  Eigen::VectorXd w = neumann_inverse(b).rowwise().sum();
  for (int t = 0; t <= horizon; ++t) w = b.matrix() * w;
  return w.cwiseAbs().maxCoeff();
}

namespace {

// A zero payoff bound gives a zero remainder even when the tail diverges.
double scaled_tail(double payoff_bound, const NonnegativeMatrix& b, int horizon) {
  return payoff_bound == 0.0 ? 0.0 : payoff_bound * geometric_tail(b, horizon);
}

// Row-major copy so categorical() can walk a contiguous row.
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Estimate summarise(const std::vector<double>& values, const std::vector<char>& keep, int horizon) {
  Estimate e;
  e.horizon = horizon;
  double sum = 0.0;
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (!keep[p]) {
      ++e.excluded_paths;
      continue;
    }
    sum += values[p];
    ++e.n;
  }
  if (e.n == 0) return e;
  e.mean = sum / static_cast<double>(e.n);
  double ss = 0.0;
  for (std::size_t p = 0; p < values.size(); ++p)
    if (keep[p]) ss += (values[p] - e.mean) * (values[p] - e.mean);
  if (e.n > 1) e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  return e;
}

// Running product of nonnegative discount factors, in log space while positive.
struct Discount {
  double log_value = 0.0;
  bool zero = false;

  void multiply(double factor) {
    if (factor <= 0.0) {
      zero = true;
    } else {
      log_value += std::log(factor);
    }
  }
  double value() const { return zero ? 0.0 : std::exp(log_value); }
};

}  // namespace

std::vector<int> simulate_chain(const StochasticMatrix& p, int i0, int horizon, std::uint64_t seed) {
  if (i0 < 0 || i0 >= p.size()) throw InvalidInput("initial state out of range");
  if (horizon < 0) throw InvalidInput("horizon must be nonnegative");
  const RowMajor rows = p.matrix();
  const int n = static_cast<int>(p.size());
  PathRng rng(seed, 0);
  std::vector<int> path{i0};
  path.reserve(static_cast<std::size_t>(horizon) + 1);
  for (int t = 0; t < horizon; ++t) path.push_back(rng.categorical(rows.row(path.back()).data(), n));
  return path;
}

Estimate simulate_dp_value(const DPModel& model, const Policy& policy, int i0, int x0, const SimulationConfig& config) {
  config.validate();
  if (i0 < 0 || i0 >= model.states() || x0 < 0 || x0 >= model.grid_size()) {
    throw InvalidInput("initial state out of range");
  }
  if (policy.choice.rows() != model.states() || policy.choice.cols() != model.grid_size()) {
    throw InvalidInput("policy has the wrong shape");
  }
  const RowMajor p = model.transition().matrix();
  const int n = model.states();

  std::vector<double> values(static_cast<std::size_t>(config.n_paths));
  std::vector<char> keep(values.size(), 1);
  detail::parallel_for(config.n_paths, [&](long path) {
    PathRng rng(config.seed, static_cast<std::uint64_t>(path));
    int i = i0;
    int x = x0;
    Discount disc;
    double total = 0.0;
    for (int t = 0; t <= config.horizon; ++t) {
      const int y = policy.choice(i, x);
      total += disc.value() * model.utility(i, x, y);
      if (t == config.horizon) break;
      const int j = rng.categorical(p.row(i).data(), n);
      disc.multiply(model.discount_factors()(i, j));
      if (disc.zero) break;
      x = model.next_state(i, j, x, y);
      i = j;
    }
    values[path] = total;
  });

  Estimate e = summarise(values, keep, config.horizon);
  e.truncation_bound = scaled_tail(model.utility_bound(), discount_matrix(model), config.horizon);
  return e;
}

Estimate simulate_pd_ratio(const AssetModel& model, int i0, const SimulationConfig& config) {
  config.validate();
  if (i0 < 0 || i0 >= model.states()) throw InvalidInput("initial state out of range");
  const RowMajor p = model.transition().matrix();
  const Eigen::MatrixXd mg = model.discount().cwiseProduct(model.growth());
  const int n = model.states();

  std::vector<double> values(static_cast<std::size_t>(config.n_paths));
  std::vector<char> keep(values.size(), 1);
  detail::parallel_for(config.n_paths, [&](long path) {
    PathRng rng(config.seed, static_cast<std::uint64_t>(path));
    int i = i0;
    Discount disc;
    double total = 0.0;
    for (int t = 1; t <= config.horizon; ++t) {
      const int j = rng.categorical(p.row(i).data(), n);
      disc.multiply(mg(i, j));
      total += disc.value();
      i = j;
    }
    values[path] = total;
  });

  Estimate e = summarise(values, keep, config.horizon);
  e.truncation_bound = geometric_tail(pricing_matrix(model), config.horizon);
  return e;
}

Estimate simulate_savings_value(const SavingsModel& model, const GridFunction& consumption, int i0, double a0,
                                const SimulationConfig& config, double scale) {
  config.validate();
  if (i0 < 0 || i0 >= model.states()) throw InvalidInput("initial state out of range");
  if (!(a0 > 0.0)) throw InvalidInput("initial wealth must be positive");
  if (!(scale > 0.0)) throw InvalidInput("policy scale must be positive");
  const ConsumptionRule rule(model, consumption);
  const RowMajor p = model.transition().matrix();
  const auto& weights = model.shocks().weights;
  const int n = model.states();
  const int nk = model.shock_count();

  std::vector<double> values(static_cast<std::size_t>(config.n_paths));
  std::vector<double> worst_u(values.size(), 0.0);
  std::vector<char> keep(values.size(), 1);
  detail::parallel_for(config.n_paths, [&](long path) {
    PathRng rng(config.seed, static_cast<std::uint64_t>(path));
    int i = i0;
    double a = a0;
    Discount disc;
    double total = 0.0;
    for (int t = 0; t <= config.horizon; ++t) {
      const double c = std::min(scale * rule(i, a), a);
      if (!(c > 0.0)) {
        keep[path] = 0;
        break;
      }
      const double u = model.utility().level(c);
      worst_u[path] = std::max(worst_u[path], std::abs(u));
      total += disc.value() * u;
      if (t == config.horizon) break;
      const int j = rng.categorical(p.row(i).data(), n);
      const int k = rng.categorical(weights.data(), nk);
      disc.multiply(model.beta(i, j, k));
      if (disc.zero) break;
      a = model.ret(i, j, k) * (a - c) + model.income(i, j, k);
      i = j;
    }
    values[path] = total;
  });

  Estimate e = summarise(values, keep, config.horizon);

  // Tail bound over the payoff range actually visited, with B = (p_ij E beta).
  Eigen::MatrixXd bb = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < nk; ++k) bb(i, j) += p(i, j) * weights[k] * model.beta(i, j, k);
  double sup_u = 0.0;
  for (std::size_t q = 0; q < worst_u.size(); ++q)
    if (keep[q]) sup_u = std::max(sup_u, worst_u[q]);
  e.truncation_bound = scaled_tail(sup_u, NonnegativeMatrix(bb), config.horizon);
  return e;
}

}  // namespace perov
