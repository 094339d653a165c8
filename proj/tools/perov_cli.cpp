// perov: spectral | solve | check | simulate
#include <CLI11.hpp>

#include <iostream>
#include <vector>

#include "perov/commands.hpp"

int main(int argc, char** argv) {
  using namespace perov::cli;

  CLI::App app{"Vector-metric contraction solver for Markov discounting models"};
  app.require_subcommand(1);

  std::string matrix_path;
  auto* spectral = app.add_subcommand("spectral", "spectral radius certificate of a nonnegative matrix");
  spectral->add_option("matrix", matrix_path, "JSON file holding a square matrix")->required();

  SolveArgs solve_args;
  std::vector<std::string> validate_raw;
  auto* solve = app.add_subcommand("solve", "compute the fixed point of a model file");
  solve->add_option("model", solve_args.model, "model file")->required();
  solve->add_option("--tol", solve_args.tol, "stopping tolerance on the error bound");
  solve->add_option("--max-iter", solve_args.max_iterations, "iteration cap");
  solve->add_option("--out", solve_args.out_dir, "output directory");
  solve->add_option("--validate", validate_raw, "Monte Carlo check: n_paths horizon seed")->expected(3);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "empirical contraction and Blackwell checks");
  check->add_option("model", check_args.model, "model file")->required();
  check->add_option("--samples", check_args.samples, "number of sampled functions");
  check->add_option("--seed", check_args.seed, "sampling seed");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of a value at one state");
  simulate->add_option("model", sim_args.model, "model file")->required();
  simulate->add_option("--paths", sim_args.n_paths, "number of paths");
  simulate->add_option("--horizon", sim_args.horizon, "truncation horizon");
  simulate->add_option("--seed", sim_args.seed, "simulation seed");
  simulate->add_option("--state", sim_args.state, "initial Markov state");
  simulate->add_option("--x-index", sim_args.x_index, "initial endogenous grid index (dp)");
  simulate->add_option("--wealth", sim_args.wealth, "initial wealth (savings)");
  simulate->add_option("--scale", sim_args.scale, "consume scale * c (savings)");
  simulate->add_option("--tol", sim_args.tol, "tolerance of the policy solve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  if (*spectral) return cmd_spectral(matrix_path, std::cout, std::cerr);
  if (*solve) {
    if (!validate_raw.empty()) {
      try {
        solve_args.validate = ValidateArgs{std::stol(validate_raw[0]), std::stoi(validate_raw[1]),
                                           std::stoull(validate_raw[2])};
      } catch (const std::exception&) {
        std::cerr << "input error: --validate expects three integers\n";
        return kInputError;
      }
    }
    return cmd_solve(solve_args, std::cout, std::cerr);
  }
  if (*check) return cmd_check(check_args, std::cout, std::cerr);
  if (*simulate) return cmd_simulate(sim_args, std::cout, std::cerr);
  return kUnexpected;
}
