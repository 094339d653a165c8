#include "perov/perov_core.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace perov {

const char* to_string(AxiomViolation::Kind k) {
  switch (k) {
    case AxiomViolation::Kind::identity: return "identity";
    case AxiomViolation::Kind::symmetry: return "symmetry";
    case AxiomViolation::Kind::triangle: return "triangle";
    case AxiomViolation::Kind::negativity: return "negativity";
  }
  return "unknown";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::tolerance_met: return "tolerance_met";
    case Termination::max_iterations: return "max_iterations";
    case Termination::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

void put_number(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  const Eigen::Index dim = report.distances.empty() ? 0 : report.distances.front().dimension();
  os << "iteration";
  for (Eigen::Index i = 0; i < dim; ++i) os << ",d_" << (i + 1);
  os << ",sup_norm\n";
  for (std::size_t n = 0; n < report.distances.size(); ++n) {
    const auto& d = report.distances[n];
    os << (n + 1);
    for (Eigen::Index i = 0; i < d.dimension(); ++i) {
      os << ',';
      put_number(os, d[i]);
    }
    os << ',';
    put_number(os, d.sup_norm());
    os << '\n';
  }
}

RateFit convergence_rate_fit(std::span<const double> trace, double rho, std::optional<double> beta) {
  if (trace.size() < 5) throw InvalidInput("convergence_rate_fit needs at least 5 recorded iterations");
  if (!(rho < 1.0)) throw InvalidInput("convergence_rate_fit requires rho < 1");

  RateFit fit;
  fit.beta = beta.value_or((rho + 1.0) / 2.0);
  if (!(fit.beta > 0.0 && fit.beta < 1.0)) throw InvalidInput("rate beta must lie in (0, 1)");

  double first = 0.0;
  for (double d : trace) {
    if (!std::isfinite(d)) return fit;
    if (first == 0.0 && d > 0.0) first = d;
  }
  if (first > 0.0 && !(trace.back() < first)) return fit;

  // C = max_n d_n / beta^n, evaluated in log space.
  const double log_beta = std::log(fit.beta);
  double log_c = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < trace.size(); ++n) {
    if (trace[n] > 0.0) log_c = std::max(log_c, std::log(trace[n]) - static_cast<double>(n) * log_beta);
  }
  fit.constant = std::exp(log_c);
  fit.contracting = std::isfinite(fit.constant);
  return fit;
}

RateFit convergence_rate_fit(const ConvergenceReport& report, double rho, std::optional<double> beta) {
  std::vector<double> sup;
  sup.reserve(report.distances.size());
  for (const auto& d : report.distances) sup.push_back(d.sup_norm());
  return convergence_rate_fit(std::span<const double>(sup), rho, beta);
}

}  // namespace perov
