#pragma once

// Implementations of the `perov` subcommands. Each returns the process exit
// code and writes human/JSON output to the given streams.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace perov::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kInputError = 2,
  kDivergence = 3,
  kVerificationFailure = 4,
};

struct ValidateArgs {
  long n_paths = 0;
  int horizon = 0;
  std::uint64_t seed = 0;
};

struct SolveArgs {
  std::string model;
  double tol = 1e-10;
  int max_iterations = 100000;
  std::string out_dir = ".";
  std::optional<ValidateArgs> validate;
};

struct CheckArgs {
  std::string model;
  int samples = 100;
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::string model;
  long n_paths = 10000;
  int horizon = 200;
  std::uint64_t seed = 0;
  int state = 0;
  int x_index = 0;                  // dp models
  std::optional<double> wealth;     // savings models; defaults to the median grid point
  double scale = 1.0;               // savings models: consume scale * c(a, i)
  double tol = 1e-10;               // for the solve that produces the simulated policy
};

int cmd_spectral(const std::string& matrix_path, std::ostream& out, std::ostream& err);
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);
int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);

}  // namespace perov::cli
