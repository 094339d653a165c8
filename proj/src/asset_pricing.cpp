#include "perov/asset_pricing.hpp"

#include <cmath>

namespace perov {

namespace {

constexpr double kUnitRootBand = 1e-9;

void check_positive(const Eigen::MatrixXd& a, Eigen::Index n, const char* name) {
  if (a.rows() != n || a.cols() != n) throw InvalidInput(std::string(name) + " must match the dimension of P");
  if (!a.allFinite() || !(a.minCoeff() > 0.0)) throw InvalidInput(std::string(name) + " entries must be positive");
}

}  // namespace

const char* to_string(PricingStatus s) { return s == PricingStatus::finite ? "finite" : "divergent"; }

AssetModel::AssetModel(StochasticMatrix p, Eigen::MatrixXd discount, Eigen::MatrixXd growth)
    : p_(std::move(p)), m_(std::move(discount)), g_(std::move(growth)) {
  check_positive(m_, p_.size(), "m");
  check_positive(g_, p_.size(), "G");
  if (p_.size() > 1 && !is_irreducible(p_)) throw InvalidInput("transition matrix must be irreducible");
}

NonnegativeMatrix pricing_matrix(const AssetModel& model) {
  return NonnegativeMatrix(
      model.transition().matrix().cwiseProduct(model.discount()).cwiseProduct(model.growth()));
}

Eigen::VectorXd pd_ratio_closed_form(const AssetModel& model) {
  const NonnegativeMatrix b = pricing_matrix(model);
  const Eigen::VectorXd b1 = b.matrix().rowwise().sum();
  return neumann_inverse(b) * b1;
}

PDIteration pd_ratio_iterative(const AssetModel& model, double tol, std::optional<Eigen::VectorXd> start,
                               int max_iterations) {
  const NonnegativeMatrix b = pricing_matrix(model);
  const Eigen::VectorXd b1 = b.matrix().rowwise().sum();
  Eigen::VectorXd v0 = start.value_or(Eigen::VectorXd::Zero(model.states()));
  if (v0.size() != model.states()) throw InvalidInput("start vector has the wrong length");

  auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return b.matrix() * v + b1; };
  auto fp = perov_iterate(op, std::move(v0), ComponentwiseMetric{}, b, PerovOptions{tol, max_iterations, false});
  return {std::move(fp.point), std::move(fp.report)};
}

Eigen::VectorXd truncated_dividend_sums(const NonnegativeMatrix& b, int n) {
  const Eigen::Index dim = b.size();
  Eigen::VectorXd term = Eigen::VectorXd::Ones(dim);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (int k = 1; k <= n; ++k) {
    term = b.matrix() * term;
    sum += term;
  }
  return sum;
}

ExistenceResult existence_check(const AssetModel& model, int horizon) {
  const NonnegativeMatrix b = pricing_matrix(model);
  ExistenceResult out;
  out.spectral = spectral_radius(b);
  out.horizon = horizon;
  out.partial_sums = truncated_dividend_sums(b, horizon);
  out.partial_sum_min = out.partial_sums.minCoeff();

  const double rho = out.spectral.rho;
  out.near_unit_root = std::abs(rho - 1.0) <= kUnitRootBand;
  if (rho < 1.0 - kUnitRootBand) {
    out.status = PricingStatus::finite;
    const Eigen::VectorXd b1 = b.matrix().rowwise().sum();
    out.v = neumann_inverse(b) * b1;
    return out;
  }

  // B = P .* (m G) inherits irreducibility from P since m, G > 0.
  out.status = PricingStatus::divergent;
  const auto perron = left_perron_vector(b);
  out.perron = perron.u;
  out.perron_mass = perron.u.dot(b.matrix().rowwise().sum());
  return out;
}

}  // namespace perov
