#pragma once

// Monte Carlo cross-checks of solved values.
//
// Random numbers: path p under seed s draws from std::mt19937_64 seeded with
// splitmix64(s ^ splitmix64(p + 1)); a draw x maps to the uniform
// (x >> 11) * 2^-53. Both pieces are fully specified, so paths are
// reproducible across platforms and independent of thread scheduling.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "perov/asset_pricing.hpp"
#include "perov/markov_dp.hpp"
#include "perov/savings.hpp"

namespace perov {

std::uint64_t splitmix64(std::uint64_t x);

/// Per-path uniform stream.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path);
  double uniform();
  /// Index drawn from a probability row (or weights vector).
  int categorical(const double* probs, int n);

 private:
  std::mt19937_64 engine_;
};

struct SimulationConfig {
  std::uint64_t seed = 0;
  long n_paths = 1000;
  int horizon = 100;

  void validate() const;
};

/// Sample mean of truncated discounted sums.
///
/// `truncation_bound` is a geometric tail bound, sup|payoff| times
/// ||B^{T+1} (I - B)^{-1} 1||; it is a construction of this library (the
/// infinite-horizon objective itself carries no truncation analysis) and is
/// +inf when the relevant matrix has rho >= 1.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n = 0;
  int horizon = 0;
  double truncation_bound = 0.0;
  long excluded_paths = 0;
};

/// i_0, ..., i_T.
std::vector<int> simulate_chain(const StochasticMatrix& p, int i0, int horizon, std::uint64_t seed);

/// sum_{t=0}^{T} (prod_{s=1}^{t} beta_{i_{s-1} i_s}) u_{i_t}(x_t, y_t) under `policy`.
Estimate simulate_dp_value(const DPModel& model, const Policy& policy, int i0, int x0, const SimulationConfig& config);

/// sum_{t=1}^{T} prod_{s=1}^{t} m_{i_{s-1} i_s} G_{i_{s-1} i_s}.
Estimate simulate_pd_ratio(const AssetModel& model, int i0, const SimulationConfig& config);

/// Truncated lifetime utility when consuming min(scale * c(a, i), a).
/// Paths that reach zero consumption are excluded and counted.
Estimate simulate_savings_value(const SavingsModel& model, const GridFunction& consumption, int i0, double a0,
                                const SimulationConfig& config, double scale = 1.0);

/// ||B^{T+1} (I - B)^{-1} 1||, or +inf if rho(B) >= 1.
double geometric_tail(const NonnegativeMatrix& b, int horizon);

}  // namespace perov
