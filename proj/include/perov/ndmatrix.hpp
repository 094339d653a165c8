#pragma once

// Nonnegative square matrices: spectral radius, sup-induced operator norm,
// Neumann series, left Perron vectors and irreducibility.
//
// Everything here is templated on the scalar type and header-only; the rest of
// the library instantiates it with double.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "perov/errors.hpp"

namespace perov {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Square matrix with entrywise nonnegative, finite entries.
template <typename Scalar>
class BasicNonnegativeMatrix {
 public:
  using Matrix = MatrixX<Scalar>;

  explicit BasicNonnegativeMatrix(Matrix entries) : m_(std::move(entries)) {
    if (m_.rows() == 0 || m_.cols() == 0) {
      throw InvalidInput("nonnegative matrix must have positive dimension");
    }
    if (m_.rows() != m_.cols()) {
      throw InvalidInput("nonnegative matrix must be square, got " +
                         std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
    }
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      for (Eigen::Index j = 0; j < m_.cols(); ++j) {
        const Scalar v = m_(i, j);
        if (!std::isfinite(static_cast<double>(v)) || v < Scalar(0)) {
          throw InvalidInput("entry (" + std::to_string(i) + "," + std::to_string(j) +
                             ") is negative or not finite");
        }
      }
    }
  }

  static BasicNonnegativeMatrix zero(Eigen::Index n) { return BasicNonnegativeMatrix(Matrix::Zero(n, n)); }

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index size() const noexcept { return m_.rows(); }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Row-stochastic refinement: every row sums to one within `row_tol`.
template <typename Scalar>
class BasicStochasticMatrix : public BasicNonnegativeMatrix<Scalar> {
 public:
  using typename BasicNonnegativeMatrix<Scalar>::Matrix;

  explicit BasicStochasticMatrix(Matrix entries, double row_tol = 1e-12)
      : BasicNonnegativeMatrix<Scalar>(std::move(entries)) {
    const auto& m = this->matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double s = static_cast<double>(m.row(i).sum());
      if (std::abs(s - 1.0) > row_tol) {
        throw InvalidInput("row " + std::to_string(i) + " of transition matrix sums to " +
                           std::to_string(s) + ", not 1");
      }
    }
  }
};

using NonnegativeMatrix = BasicNonnegativeMatrix<double>;
using StochasticMatrix = BasicStochasticMatrix<double>;

/// Tolerances for the spectral routines; defaults are the library-wide ones.
struct SpectralOptions {
  double bracket_tol = 1e-13;      // relative width of the Collatz-Wielandt bracket
  double accept_tol = 1e-10;       // absolute bracket width accepted before falling back
  int max_iterations = 20000;
  double perron_residual_tol = 1e-10;
  double neumann_residual_tol = 1e-12;
  double neumann_agreement_tol = 1e-8;
};

/// Max absolute row sum: the operator norm induced by the sup vector norm.
template <typename Derived>
typename Derived::RealScalar sup_operator_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw InvalidInput("sup_operator_norm requires a nonempty square matrix");
  }
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Strongly connected components of the graph with an edge i->j iff b(i,j) > 0,
/// in reverse topological order of the condensation (Kosaraju).
template <typename Scalar>
std::vector<std::vector<Eigen::Index>> strongly_connected_components(const MatrixX<Scalar>& b) {
  const Eigen::Index n = b.rows();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(n));

  // First pass: finishing order on the forward graph.
  for (Eigen::Index root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> stack{{root, 0}};
    seen[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      while (next < n && !(b(v, next) > Scalar(0) && !seen[next])) ++next;
      if (next < n) {
        const Eigen::Index w = next++;
        seen[w] = 1;
        stack.emplace_back(w, 0);
      } else {
        order.push_back(v);
        stack.pop_back();
      }
    }
  }

  // Second pass on the transposed graph.
  std::vector<std::vector<Eigen::Index>> components;
  std::fill(seen.begin(), seen.end(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (seen[*it]) continue;
    std::vector<Eigen::Index> comp;
    std::vector<Eigen::Index> stack{*it};
    seen[*it] = 1;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (Eigen::Index u = 0; u < n; ++u) {
        if (!seen[u] && b(u, v) > Scalar(0)) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

/// True iff the support graph is strongly connected. A 1x1 matrix counts as
/// irreducible only when its entry is positive, so the zero matrix is always
/// reducible.
template <typename Scalar>
bool is_irreducible(const BasicNonnegativeMatrix<Scalar>& b) {
  if (b.size() == 1) return b(0, 0) > Scalar(0);
  return strongly_connected_components<Scalar>(b.matrix()).size() == 1;
}

namespace detail {

template <typename Scalar>
struct LeftPowerResult {
  Scalar rho{0};
  VectorX<Scalar> u;
  Scalar lo{0};
  Scalar hi{0};
  int iterations = 0;
};

// Left power iteration on C + sI from the all-ones vector. For u > 0 the
// Collatz-Wielandt ratios (u'C)_j / u_j bracket rho(C); the shift makes an
// irreducible C primitive so the bracket closes.
template <typename Scalar>
LeftPowerResult<Scalar> shifted_left_power(const MatrixX<Scalar>& c, const SpectralOptions& opt) {
  const Eigen::Index n = c.rows();
  LeftPowerResult<Scalar> r;
  r.u = VectorX<Scalar>::Constant(n, Scalar(1) / Scalar(n));

  const VectorX<Scalar> colsum = c.colwise().sum().transpose();
  Scalar shift = (colsum.minCoeff() + colsum.maxCoeff()) / Scalar(2);
  if (!(shift > Scalar(0))) shift = Scalar(1);

  for (int k = 0; k < opt.max_iterations; ++k) {
    r.iterations = k + 1;
    VectorX<Scalar> w = (r.u.transpose() * c).transpose() + shift * r.u;
    const VectorX<Scalar> ratio = w.cwiseQuotient(r.u).array() - shift;
    r.lo = std::max(ratio.minCoeff(), Scalar(0));
    r.hi = ratio.maxCoeff();
    r.u = w / w.sum();
    const Scalar width = r.hi - r.lo;
    if (width <= Scalar(opt.bracket_tol) * std::max(Scalar(1), r.hi)) break;
  }
  r.rho = (r.lo + r.hi) / Scalar(2);
  return r;
}

template <typename Scalar>
Scalar left_residual(const MatrixX<Scalar>& c, const VectorX<Scalar>& u, Scalar rho) {
  const Scalar unorm = u.cwiseAbs().maxCoeff();
  if (unorm == Scalar(0)) return Scalar(0);
  return ((u.transpose() * c).transpose() - rho * u).cwiseAbs().maxCoeff() / unorm;
}

template <typename Scalar>
Scalar eigen_direct_radius(const MatrixX<Scalar>& c, bool& ok) {
  Eigen::EigenSolver<MatrixX<Scalar>> es(c, false);
  ok = es.info() == Eigen::Success;
  if (!ok) return Scalar(0);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Result of the Gelfand estimate ||B^n||^(1/n).
struct GelfandEstimate {
  double value = 0.0;
  bool overflow = false;
};

/// ||B^n||^(1/n) in the sup-induced norm, computed by repeated squaring with
/// log-scale renormalisation. Saturates at the largest double (flagged) if the
/// result itself is not representable.
template <typename Scalar>
GelfandEstimate gelfand_estimate(const BasicNonnegativeMatrix<Scalar>& b, long n) {
  if (n < 1) throw InvalidInput("gelfand_estimate requires n >= 1");
  using std::log;
  const Eigen::Index dim = b.size();

  MatrixX<Scalar> base = b.matrix();
  long double base_log = 0;
  MatrixX<Scalar> acc = MatrixX<Scalar>::Identity(dim, dim);
  long double acc_log = 0;

  auto renormalise = [](MatrixX<Scalar>& m, long double& lg) {
    const Scalar s = sup_operator_norm(m);
    if (s > Scalar(0)) {
      m /= s;
      lg += log(static_cast<long double>(s));
    }
    return s > Scalar(0);
  };

  if (!renormalise(base, base_log)) return {};
  for (long k = n; k > 0; k >>= 1) {
    if (k & 1) {
      acc = acc * base;
      acc_log += base_log;
      if (!renormalise(acc, acc_log)) return {};
    }
    if (k > 1) {
      base = base * base;
      base_log *= 2;
      if (!renormalise(base, base_log)) {
        // B^(2^m) vanished; a later factor in acc will too.
        return {};
      }
    }
  }
  const long double norm_log = acc_log + log(static_cast<long double>(sup_operator_norm(acc)));
  const long double v = std::exp(norm_log / static_cast<long double>(n));
  GelfandEstimate out;
  if (!std::isfinite(static_cast<double>(v))) {
    out.value = std::numeric_limits<double>::max();
    out.overflow = true;
  } else {
    out.value = static_cast<double>(v);
  }
  return out;
}

/// Spectral radius of a nonnegative matrix.
///
/// The matrix is split into strongly connected components; the radius is the
/// largest radius of the irreducible diagonal blocks, each found by shifted
/// left power iteration with Collatz-Wielandt bracketing. Blocks whose bracket
/// does not close fall back to a dense eigensolver.
template <typename Scalar>
SpectralCertificate spectral_radius(const BasicNonnegativeMatrix<Scalar>& b,
                                    const SpectralOptions& opt = {}) {
  const auto& m = b.matrix();
  SpectralCertificate cert;
  cert.rho = 0.0;
  cert.method = SpectralMethod::power_iteration;

  bool any_fallback = false;
  bool any_gelfand = false;
  for (const auto& comp : strongly_connected_components<Scalar>(m)) {
    const auto k = static_cast<Eigen::Index>(comp.size());
    if (k == 1) {
      const double d = static_cast<double>(m(comp[0], comp[0]));
      if (d > cert.rho) {
        cert.rho = d;
        cert.residual = 0.0;
      }
      continue;
    }
    MatrixX<Scalar> block(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < k; ++c) block(r, c) = m(comp[r], comp[c]);

    auto pw = detail::shifted_left_power<Scalar>(block, opt);
    cert.iterations += pw.iterations;
    double rho = static_cast<double>(pw.rho);
    double residual = static_cast<double>(detail::left_residual<Scalar>(block, pw.u, pw.rho));
    if (static_cast<double>(pw.hi - pw.lo) > opt.accept_tol) {
      bool ok = false;
      const Scalar direct = detail::eigen_direct_radius<Scalar>(block, ok);
      if (ok) {
        any_fallback = true;
        rho = static_cast<double>(direct);
      } else {
        any_gelfand = true;
        rho = gelfand_estimate(BasicNonnegativeMatrix<Scalar>(block), 1L << 20).value;
      }
      residual = static_cast<double>(detail::left_residual<Scalar>(block, pw.u, Scalar(rho)));
    }
    // Row and column sums bracket the radius of an irreducible block; this
    // pins stochastic blocks to exactly one.
    const VectorX<Scalar> rows = block.rowwise().sum();
    const VectorX<Scalar> cols = block.colwise().sum().transpose();
    const double lower = static_cast<double>(std::max(rows.minCoeff(), cols.minCoeff()));
    const double upper = static_cast<double>(std::min(rows.maxCoeff(), cols.maxCoeff()));
    rho = std::clamp(rho, lower, upper);
    if (rho > cert.rho) {
      cert.rho = rho;
      cert.residual = residual;
    }
  }
  if (any_gelfand) {
    cert.method = SpectralMethod::gelfand_bound;
  } else if (any_fallback) {
    cert.method = SpectralMethod::eigen_direct;
  }
  return cert;
}

/// Positive left eigenvector for rho(B), normalised to sum one.
template <typename Scalar>
struct PerronVector {
  VectorX<Scalar> u;
  Scalar rho{0};
  Scalar residual{0};
};

template <typename Scalar>
PerronVector<Scalar> left_perron_vector(const BasicNonnegativeMatrix<Scalar>& b,
                                        const SpectralOptions& opt = {}) {
  if (!is_irreducible(b)) {
    throw NotIrreducible("left Perron vector requires an irreducible matrix");
  }
  const auto& m = b.matrix();
  PerronVector<Scalar> out;
  if (b.size() == 1) {
    out.u = VectorX<Scalar>::Ones(1);
    out.rho = m(0, 0);
    return out;
  }

  auto pw = detail::shifted_left_power<Scalar>(m, opt);
  out.u = pw.u;
  out.rho = pw.rho;
  out.residual = detail::left_residual<Scalar>(m, out.u, out.rho);

  if (static_cast<double>(out.residual) > opt.perron_residual_tol) {
    // Slow bracket: take the dominant eigenvector of B' directly.
    Eigen::EigenSolver<MatrixX<Scalar>> es(m.transpose());
    if (es.info() != Eigen::Success) {
      throw NumericError("left Perron vector: eigensolver failed");
    }
    Eigen::Index best = 0;
    es.eigenvalues().real().maxCoeff(&best);
    VectorX<Scalar> u = es.eigenvectors().col(best).real().cwiseAbs();
    out.u = u / u.sum();
    out.rho = es.eigenvalues()(best).real();
    out.residual = detail::left_residual<Scalar>(m, out.u, out.rho);
  }
  return out;
}

/// (I - B)^{-1} for rho(B) < 1.
///
/// Computed both by the Neumann series (doubling: S_{2k} = S_k + B^k S_k, until
/// ||B^k|| is below the residual tolerance) and by an LU solve; the two must
/// agree entrywise. The series value is returned, so the result is >= I
/// entrywise by construction.
template <typename Scalar>
MatrixX<Scalar> neumann_inverse(const BasicNonnegativeMatrix<Scalar>& b, const SpectralOptions& opt = {}) {
  const SpectralCertificate cert = spectral_radius(b, opt);
  if (!(cert.rho < 1.0)) {
    throw DivergenceError("Neumann series diverges: rho(B) = " + std::to_string(cert.rho) + " >= 1",
                          cert);
  }
  const Eigen::Index n = b.size();
  const MatrixX<Scalar> eye = MatrixX<Scalar>::Identity(n, n);

  MatrixX<Scalar> series = eye;
  MatrixX<Scalar> power = b.matrix();
  bool converged = false;
  for (int doubling = 0; doubling < 64; ++doubling) {
    if (static_cast<double>(sup_operator_norm(power)) <= opt.neumann_residual_tol) {
      converged = true;
      break;
    }
    series += power * series;
    power = power * power;
  }
  if (!converged) {
    // 2^64 terms without decay: the radius is one to working precision.
    throw DivergenceError("Neumann series did not reach residual tolerance", cert);
  }

  const MatrixX<Scalar> direct = (eye - b.matrix()).partialPivLu().solve(eye);
  const Scalar gap = (series - direct).cwiseAbs().maxCoeff();
  if (!(static_cast<double>(gap) <= opt.neumann_agreement_tol)) {
    throw NumericError("Neumann series and direct solve disagree by " +
                       std::to_string(static_cast<double>(gap)));
  }
  return series;
}

}  // namespace perov
