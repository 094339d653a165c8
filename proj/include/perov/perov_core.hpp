#pragma once

// Vector-valued metrics and the generalized (Perov) contraction machinery:
// fixed-point iteration with certified stopping, sample-based verification of
// the contraction inequality d(Tx, Ty) <= B d(x, y), and the monotonicity /
// discounting sufficient conditions.

#include <Eigen/Dense>

#include <concepts>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "perov/ndmatrix.hpp"

namespace perov {

/// Element of R_+^I: the value of a vector-valued metric.
class VectorDistance {
 public:
  VectorDistance() = default;
  explicit VectorDistance(Eigen::VectorXd components) : c_(std::move(components)) {}

  const Eigen::VectorXd& components() const noexcept { return c_; }
  Eigen::Index dimension() const noexcept { return c_.size(); }
  double operator[](Eigen::Index i) const { return c_(i); }

  double sup_norm() const { return c_.size() == 0 ? 0.0 : c_.cwiseAbs().maxCoeff(); }

 private:
  Eigen::VectorXd c_;
};

/// Values over (exogenous state, grid point): rows are states, columns grid
/// points. Finite vectors in R^I are the one-column case.
using GridFunction = Eigen::MatrixXd;

/// A callable d(x, y) -> VectorDistance over some point set.
template <typename M, typename Point>
concept VectorMetric = requires(const M& m, const Point& x) {
  { m(x, x) } -> std::convertible_to<VectorDistance>;
};

/// d_i(x, y) = |x_i - y_i| on R^I.
struct ComponentwiseMetric {
  VectorDistance operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return VectorDistance((x - y).cwiseAbs());
  }
};

/// d_i(f, g) = max over grid points of |f_i(x) - g_i(x)|; one component per row.
struct RowSupMetric {
  VectorDistance operator()(const GridFunction& f, const GridFunction& g) const {
    if (f.cols() == 0) return VectorDistance(Eigen::VectorXd::Zero(f.rows()));
    return VectorDistance((f - g).cwiseAbs().rowwise().maxCoeff());
  }
};

// ---------------------------------------------------------------------------
// Metric axioms

struct AxiomViolation {
  enum class Kind { identity, symmetry, triangle, negativity };
  Kind kind;
  std::size_t x = 0, y = 0, z = 0;  // sample indices
  Eigen::Index component = 0;
  double amount = 0.0;
};

const char* to_string(AxiomViolation::Kind k);

struct AxiomReport {
  std::vector<AxiomViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Checks nonnegativity/identity, symmetry and the entrywise triangle
/// inequality on all pairs and triples drawn from `sample`.
///
/// Identity is checked one way only: d(x, x) must vanish. Distinct sample
/// entries that compare equal are allowed a zero distance.
template <typename Point, VectorMetric<Point> Metric>
AxiomReport metric_axiom_check(const Metric& d, std::span<const Point> sample, double tol = 1e-12) {
  if (sample.size() < 3) throw InvalidInput("metric_axiom_check needs at least 3 sample points");
  AxiomReport rep;
  const std::size_t n = sample.size();
  std::vector<std::vector<Eigen::VectorXd>> dist(n, std::vector<Eigen::VectorXd>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) dist[a][b] = VectorDistance(d(sample[a], sample[b])).components();

  auto report = [&](AxiomViolation::Kind k, std::size_t x, std::size_t y, std::size_t z, Eigen::Index c,
                    double amount) { rep.violations.push_back({k, x, y, z, c, amount}); };

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const auto& dab = dist[a][b];
      for (Eigen::Index c = 0; c < dab.size(); ++c) {
        if (dab(c) < -tol) report(AxiomViolation::Kind::negativity, a, b, 0, c, -dab(c));
        if (a == b && std::abs(dab(c)) > tol) report(AxiomViolation::Kind::identity, a, b, 0, c, std::abs(dab(c)));
        const double asym = std::abs(dab(c) - dist[b][a](c));
        if (a < b && asym > tol) report(AxiomViolation::Kind::symmetry, a, b, 0, c, asym);
      }
      for (std::size_t m = 0; m < n; ++m) {
        const Eigen::VectorXd excess = dab - dist[a][m] - dist[m][b];
        for (Eigen::Index c = 0; c < excess.size(); ++c)
          if (excess(c) > tol) report(AxiomViolation::Kind::triangle, a, m, b, c, excess(c));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Fixed-point iteration

enum class Termination { tolerance_met, max_iterations, diverged };
const char* to_string(Termination t);

struct ConvergenceReport {
  int iterations = 0;
  std::vector<VectorDistance> distances;  // distances[n] = d(x^{n+1}, x^n)
  double rho = 0.0;                       // spectral radius of the coefficient matrix
  double inverse_norm = 0.0;              // ||(I - B)^{-1}||
  double error_bound = 0.0;               // ||d(x^N, x^{N-1})|| * ||(I - B)^{-1}||
  double fitted_rate = 0.0;               // beta of the O(beta^n) envelope
  double fitted_constant = 0.0;           // C of the envelope
  bool rate_certified = false;
  Termination terminated = Termination::max_iterations;
};

/// Writes `iteration,d_1,...,d_I,sup_norm` rows, numbers with 17 significant digits.
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);

struct RateFit {
  double beta = 0.0;
  double constant = 0.0;
  bool contracting = false;  // false: diverging or non-decaying trace, no usable C
};

/// Smallest C with sup_norm(trace[n]) <= C beta^n over the recorded trace,
/// with beta = (rho + 1) / 2 unless overridden.
///
/// A trace is flagged non-contracting when it contains non-finite values or its
/// last distance is not below its first nonzero one.
RateFit convergence_rate_fit(std::span<const double> sup_trace, double rho,
                             std::optional<double> beta = std::nullopt);
RateFit convergence_rate_fit(const ConvergenceReport& report, double rho,
                             std::optional<double> beta = std::nullopt);

struct PerovOptions {
  double tol = 1e-10;
  int max_iterations = 10000;
  bool keep_iterates = false;
};

template <typename Point>
struct FixedPointResult {
  Point point;
  ConvergenceReport report;
  std::vector<Point> iterates;  // x^0, x^1, ...; filled only with keep_iterates
};

/// Iterates x^{n+1} = T x^n until ||d(x^{n+1}, x^n)|| * ||(I - B)^{-1}|| <= tol.
///
/// Refuses to start (DivergenceError) unless rho(B) < 1. Running out of
/// iterations is not an error: the report says max_iterations and the last
/// iterate is returned. Non-finite distances stop the loop as diverged.
template <typename Point, typename Operator, VectorMetric<Point> Metric>
  requires std::invocable<const Operator&, const Point&>
FixedPointResult<Point> perov_iterate(const Operator& op, Point x0, const Metric& d, const NonnegativeMatrix& b,
                                      const PerovOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InvalidInput("perov_iterate: tol must be positive");
  const SpectralCertificate cert = spectral_radius(b);
  if (!(cert.rho < 1.0)) {
    throw DivergenceError("coefficient matrix has rho(B) = " + std::to_string(cert.rho) + " >= 1", cert);
  }
  const double k = sup_operator_norm(neumann_inverse(b));

  FixedPointResult<Point> out{std::move(x0), {}, {}};
  auto& rep = out.report;
  rep.rho = cert.rho;
  rep.inverse_norm = k;
  if (opt.keep_iterates) out.iterates.push_back(out.point);

  for (int n = 0; n < opt.max_iterations; ++n) {
    Point next = op(out.point);
    VectorDistance dist = d(next, out.point);
    const double s = dist.sup_norm();
    rep.distances.push_back(std::move(dist));
    rep.iterations = n + 1;
    if (!std::isfinite(s)) {
      rep.terminated = Termination::diverged;
      break;
    }
    out.point = std::move(next);
    if (opt.keep_iterates) out.iterates.push_back(out.point);
    rep.error_bound = s * k;
    if (rep.error_bound <= opt.tol) {
      rep.terminated = Termination::tolerance_met;
      break;
    }
  }

  if (rep.iterations >= 5 && rep.terminated != Termination::diverged) {
    const RateFit fit = convergence_rate_fit(rep, cert.rho);
    rep.fitted_rate = fit.beta;
    rep.fitted_constant = fit.constant;
    rep.rate_certified = fit.contracting;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sample-based verification

struct ContractionReport {
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  double worst_violation = 0.0;  // max over pairs/components of d(Tx,Ty) - B d(x,y)
  std::size_t worst_pair = 0;
  Eigen::Index worst_component = 0;
  bool ok() const noexcept { return violations == 0; }
};

/// Checks d(Tx, Ty) <= B d(x, y) entrywise (slack `tol`) on every pair.
template <typename Point, typename Operator, VectorMetric<Point> Metric>
ContractionReport verify_contraction_empirical(const Operator& op, const Metric& d, const NonnegativeMatrix& b,
                                               std::span<const std::pair<Point, Point>> pairs,
                                               double tol = 1e-10) {
  if (pairs.empty()) throw InvalidInput("verify_contraction_empirical: no pairs");
  ContractionReport rep;
  rep.worst_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [x, y] = pairs[p];
    const Eigen::VectorXd lhs = VectorDistance(d(op(x), op(y))).components();
    const Eigen::VectorXd rhs = b.matrix() * VectorDistance(d(x, y)).components();
    if (lhs.size() != rhs.size()) throw InvalidInput("metric dimension does not match B");
    const Eigen::VectorXd excess = lhs - rhs;
    Eigen::Index c = 0;
    const double worst = excess.maxCoeff(&c);
    if (worst > tol) ++rep.violations;
    if (worst > rep.worst_violation) {
      rep.worst_violation = worst;
      rep.worst_pair = p;
      rep.worst_component = c;
    }
    ++rep.pairs_checked;
  }
  return rep;
}

struct BlackwellReport {
  std::size_t monotonicity_checks = 0;
  std::size_t discounting_checks = 0;
  std::size_t monotonicity_violations = 0;
  std::size_t discounting_violations = 0;
  double worst_monotonicity = 0.0;  // max of T(f) - T(f + h), should be <= 0
  double worst_discounting = 0.0;   // max of T(f + c) - T(f) - B c, should be <= 0
  bool ok() const noexcept { return monotonicity_violations == 0 && discounting_violations == 0; }
};

/// Adds c_i to every grid point of row i.
inline GridFunction add_state_constants(const GridFunction& f, const Eigen::VectorXd& c) {
  return f + c.replicate(1, f.cols());
}

/// Checks monotonicity on ordered pairs (f, f + h), h >= 0, and discounting
/// T(f + c) <= T f + B c for every sampled f and constant c.
///
/// Perturbations default to the constant vectors spread over each row, which
/// keeps f + h inside any space closed under adding state constants.
template <typename Operator>
  requires std::invocable<const Operator&, const GridFunction&>
BlackwellReport blackwell_check(const Operator& op, const NonnegativeMatrix& b,
                                std::span<const GridFunction> functions, std::span<const Eigen::VectorXd> constants,
                                std::span<const GridFunction> perturbations = {}, double tol = 1e-10) {
  std::vector<GridFunction> spread;
  if (perturbations.empty()) {
    for (const auto& f : functions) {
      for (const auto& c : constants) spread.push_back(add_state_constants(GridFunction::Zero(f.rows(), f.cols()), c));
      break;
    }
    perturbations = spread;
  }
  for (const auto& h : perturbations)
    if (h.size() > 0 && h.minCoeff() < 0.0) throw InvalidInput("blackwell_check: perturbations must be >= 0");
  for (const auto& c : constants)
    if (c.size() > 0 && c.minCoeff() < 0.0) throw InvalidInput("blackwell_check: constants must be >= 0");

  BlackwellReport rep;
  rep.worst_monotonicity = -std::numeric_limits<double>::infinity();
  rep.worst_discounting = -std::numeric_limits<double>::infinity();
  for (const auto& f : functions) {
    const GridFunction tf = op(f);
    for (const auto& h : perturbations) {
      const double worst = (tf - op(GridFunction(f + h))).maxCoeff();
      ++rep.monotonicity_checks;
      if (worst > tol) ++rep.monotonicity_violations;
      rep.worst_monotonicity = std::max(rep.worst_monotonicity, worst);
    }
    for (const auto& c : constants) {
      const Eigen::VectorXd bc = b.matrix() * c;
      const double worst = (op(add_state_constants(f, c)) - add_state_constants(tf, bc)).maxCoeff();
      ++rep.discounting_checks;
      if (worst > tol) ++rep.discounting_violations;
      rep.worst_discounting = std::max(rep.worst_discounting, worst);
    }
  }
  return rep;
}

}  // namespace perov
