#pragma once

// Price-dividend ratios in a finite-state Markov economy. With
// B = (p_ij m_ij G_ij), the ratios solve v = Bv + B1; they are finite iff
// rho(B) < 1, in which case v = (I - B)^{-1} B 1.

#include <Eigen/Dense>

#include <optional>

#include "perov/ndmatrix.hpp"
#include "perov/perov_core.hpp"

namespace perov {

class AssetModel {
 public:
  /// Requires an irreducible P and strictly positive m and G.
  AssetModel(StochasticMatrix p, Eigen::MatrixXd discount, Eigen::MatrixXd growth);

  int states() const noexcept { return static_cast<int>(p_.size()); }
  const StochasticMatrix& transition() const noexcept { return p_; }
  const Eigen::MatrixXd& discount() const noexcept { return m_; }
  const Eigen::MatrixXd& growth() const noexcept { return g_; }

 private:
  StochasticMatrix p_;
  Eigen::MatrixXd m_;
  Eigen::MatrixXd g_;
};

/// B_ij = p_ij m_ij G_ij.
NonnegativeMatrix pricing_matrix(const AssetModel& model);

/// v = (I - B)^{-1} B 1; DivergenceError when rho(B) >= 1.
Eigen::VectorXd pd_ratio_closed_form(const AssetModel& model);

struct PDIteration {
  Eigen::VectorXd v;
  ConvergenceReport report;
};

/// Perov iteration of v -> Bv + B1 under the componentwise metric.
PDIteration pd_ratio_iterative(const AssetModel& model, double tol = 1e-12,
                               std::optional<Eigen::VectorXd> start = std::nullopt, int max_iterations = 1000000);

enum class PricingStatus { finite, divergent };
const char* to_string(PricingStatus s);

/// Outcome of the existence test.
///
/// In the divergent branch `perron` is the left Perron vector u of B and
/// `perron_mass` = u'B1 > 0, which contradicts (1 - rho) u'v >= 0 for any
/// finite v. `partial_sums` holds sum_{k=1}^{n} B^k 1 at n = `horizon`.
struct ExistenceResult {
  PricingStatus status = PricingStatus::finite;
  SpectralCertificate spectral;
  bool near_unit_root = false;  // |rho - 1| <= 1e-9, classified divergent
  Eigen::VectorXd v;            // finite branch only
  Eigen::VectorXd perron;
  double perron_mass = 0.0;
  int horizon = 64;
  Eigen::VectorXd partial_sums;
  double partial_sum_min = 0.0;
};

ExistenceResult existence_check(const AssetModel& model, int horizon = 64);

/// sum_{k=1}^{n} B^k 1.
Eigen::VectorXd truncated_dividend_sums(const NonnegativeMatrix& b, int n);

}  // namespace perov
