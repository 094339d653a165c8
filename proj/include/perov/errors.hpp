#pragma once

#include <stdexcept>
#include <string>

namespace perov {

enum class SpectralMethod { eigen_direct, power_iteration, gelfand_bound };

inline const char* to_string(SpectralMethod m) {
  switch (m) {
    case SpectralMethod::eigen_direct: return "eigen_direct";
    case SpectralMethod::power_iteration: return "power_iteration";
    case SpectralMethod::gelfand_bound: return "gelfand_bound";
  }
  return "unknown";
}

/// Outcome of a spectral radius computation.
///
/// `residual` is the left-eigenvector residual ||u'B - rho u'|| / ||u'|| of the
/// block that attains the radius (0 for trivially exact cases).
struct SpectralCertificate {
  double rho = 0.0;
  SpectralMethod method = SpectralMethod::power_iteration;
  int iterations = 0;
  double residual = 0.0;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad dimensions, negative entries, schema violations.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A model whose own invariants are violated (e.g. an empty feasible set).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine failed (non-bracketed root, disagreement
/// between two independent computations, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

class NotIrreducible : public Error {
 public:
  using Error::Error;
};

/// Raised when rho(B) >= 1 makes the requested computation meaningless.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, SpectralCertificate cert)
      : Error(what), certificate_(cert) {}

  const SpectralCertificate& certificate() const noexcept { return certificate_; }

 private:
  SpectralCertificate certificate_;
};

}  // namespace perov
