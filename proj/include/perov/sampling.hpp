#pragma once

// Deterministic sample generators for the empirical contraction and
// monotonicity checks. All draws come from PathRng(seed, sample index).

#include <cstdint>
#include <vector>

#include "perov/perov_core.hpp"
#include "perov/savings.hpp"

namespace perov {

/// Entries uniform in [-scale, scale].
std::vector<GridFunction> sample_grid_functions(Eigen::Index rows, Eigen::Index cols, std::size_t count, double scale,
                                                std::uint64_t seed);

/// Entries uniform in [0, scale].
std::vector<GridFunction> sample_nonnegative(Eigen::Index rows, Eigen::Index cols, std::size_t count, double scale,
                                             std::uint64_t seed);

std::vector<Eigen::VectorXd> sample_constants(Eigen::Index dim, std::size_t count, double scale, std::uint64_t seed);

/// Marginal utilities u'(c) of random increasing consumption rules
/// c_i(a) = min(a, s_i a + t_i (1 - e^{-a})), so each sample is positive and
/// decreasing in a.
std::vector<GridFunction> sample_savings_candidates(const SavingsModel& model, std::size_t count, std::uint64_t seed);

/// h_i(a) = r_i u'(a) / u'(a_min) + q_i with r_i, q_i in [0, scale]: nonnegative
/// and decreasing, so f + h stays a valid candidate.
std::vector<GridFunction> sample_savings_perturbations(const SavingsModel& model, std::size_t count, double scale,
                                                       std::uint64_t seed);

}  // namespace perov
