#include "perov/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "perov/model_io.hpp"
#include "perov/sampling.hpp"

namespace perov::cli {

namespace {

using io::json;

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << " (rho = " << io::number(e.certificate().rho) << ")\n";
    return kDivergence;
  } catch (const InvalidInput& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << '\n';
    return kUnexpected;
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

std::string convergence_csv(const ConvergenceReport& r) {
  std::ostringstream os;
  write_convergence_csv(os, r);
  return os.str();
}

json divergence_json(const char* kind, const SpectralCertificate& cert) {
  return {{"kind", kind}, {"status", "divergent"}, {"rho", cert.rho}, {"spectral", io::certificate_json(cert)}};
}

void note_convergence(json& result, const ConvergenceReport& r) {
  result["convergence"] = io::convergence_json(r);
  if (r.terminated == Termination::tolerance_met) {
    result["status"] = "solved";
  } else {
    result["status"] = "not_converged";
    result["warnings"].push_back(std::string("iteration stopped: ") + to_string(r.terminated));
  }
}

bool brackets(const Estimate& e, double reference) {
  return std::abs(e.mean - reference) <= 3.0 * e.std_error + e.truncation_bound;
}

json validation_entry(const Estimate& e, double reference) {
  return {{"estimate", io::estimate_json(e)}, {"reference", reference}, {"brackets", brackets(e, reference)}};
}

SimulationConfig config_from(const ValidateArgs& v) { return SimulationConfig{v.seed, v.n_paths, v.horizon}; }

// ---------------------------------------------------------------------------
// solve

int solve_dp_file(const DPModel& model, const SolveArgs& args, const std::filesystem::path& dir, json& result,
                  std::ostream& out) {
  DPSolution sol;
  try {
    sol = solve_dp(model, DPSolveOptions{args.tol, args.max_iterations, std::nullopt});
  } catch (const DivergenceError& e) {
    result = divergence_json("dp", e.certificate());
    out << io::dump(result);
    write_file(dir / "result.json", io::dump(result));
    return kDivergence;
  }
  result["spectral"] = io::certificate_json(sol.spectral);
  note_convergence(result, sol.report);
  Eigen::MatrixXd policy = sol.policy.choice.cast<double>();
  result["solution"] = {{"V", io::matrix_json(sol.value)}, {"policy", json::array()}};
  for (Eigen::Index i = 0; i < policy.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index x = 0; x < policy.cols(); ++x) row.push_back(sol.policy.choice(i, x));
    result["solution"]["policy"].push_back(std::move(row));
  }

  std::ostringstream csv;
  csv << "state,x_index,x_value,V,y_choice\n";
  for (int i = 0; i < model.states(); ++i)
    for (int x = 0; x < model.grid_size(); ++x)
      csv << i << ',' << x << ',' << io::number(model.x_grid()[x]) << ',' << io::number(sol.value(i, x)) << ','
          << io::number(model.y_grid()[sol.policy.choice(i, x)]) << '\n';
  write_file(dir / "solution.csv", csv.str());
  write_file(dir / "convergence.csv", convergence_csv(sol.report));

  bool ok = true;
  if (args.validate) {
    const GridFunction reference = policy_value(model, sol.policy, args.tol);
    result["validation"] = json::array();
    for (int i = 0; i < model.states(); ++i) {
      const Estimate e = simulate_dp_value(model, sol.policy, i, 0, config_from(*args.validate));
      json entry = validation_entry(e, reference(i, 0));
      entry["state"] = i;
      entry["x_index"] = 0;
      ok = ok && brackets(e, reference(i, 0));
      result["validation"].push_back(std::move(entry));
    }
  }
  return ok ? kOk : kVerificationFailure;
}

int solve_asset_file(const AssetModel& model, const SolveArgs& args, const std::filesystem::path& dir, json& result,
                     std::ostream& out) {
  const ExistenceResult ex = existence_check(model);
  result["rho"] = ex.spectral.rho;
  result["spectral"] = io::certificate_json(ex.spectral);
  if (ex.status == PricingStatus::divergent) {
    result["status"] = "divergent";
    result["certificate"] = {{"perron_vector", io::vector_json(ex.perron)},
                             {"perron_mass", ex.perron_mass},
                             {"horizon", ex.horizon},
                             {"partial_sums", io::vector_json(ex.partial_sums)},
                             {"partial_sum_min", ex.partial_sum_min},
                             {"near_unit_root", ex.near_unit_root}};
    out << io::dump(result);
    write_file(dir / "result.json", io::dump(result));
    return kDivergence;
  }
  const PDIteration it = pd_ratio_iterative(model, args.tol, std::nullopt, args.max_iterations);
  note_convergence(result, it.report);
  result["v"] = io::vector_json(ex.v);
  result["v_iterative"] = io::vector_json(it.v);

  std::ostringstream csv;
  csv << "state,v,v_iterative\n";
  for (int i = 0; i < model.states(); ++i)
    csv << i << ',' << io::number(ex.v(i)) << ',' << io::number(it.v(i)) << '\n';
  write_file(dir / "solution.csv", csv.str());
  write_file(dir / "convergence.csv", convergence_csv(it.report));

  bool ok = true;
  if (args.validate) {
    result["validation"] = json::array();
    for (int i = 0; i < model.states(); ++i) {
      const Estimate e = simulate_pd_ratio(model, i, config_from(*args.validate));
      json entry = validation_entry(e, ex.v(i));
      entry["state"] = i;
      ok = ok && brackets(e, ex.v(i));
      result["validation"].push_back(std::move(entry));
    }
  }
  return ok ? kOk : kVerificationFailure;
}

int solve_savings_file(const SavingsModel& model, const SolveArgs& args, const std::filesystem::path& dir,
                       json& result, std::ostream& out) {
  SavingsSolution sol;
  try {
    SavingsSolveOptions opt;
    opt.tol = args.tol;
    opt.max_iterations = args.max_iterations;
    sol = solve_savings(model, opt);
  } catch (const DivergenceError& e) {
    result = divergence_json("savings", e.certificate());
    out << io::dump(result);
    write_file(dir / "result.json", io::dump(result));
    return kDivergence;
  }
  result["spectral"] = io::certificate_json(sol.spectral);
  note_convergence(result, sol.report);
  if (below_grid_income(model)) {
    result["warnings"].push_back(
        "income can fall below the smallest grid point; below-grid extrapolation need not contract");
  }
  result["solution"] = {{"max_abs_euler_residual", sol.euler_residual.cwiseAbs().maxCoeff()}};

  std::ostringstream csv;
  csv << "state,a,c,f,euler_residual\n";
  for (int i = 0; i < model.states(); ++i)
    for (int m = 0; m < model.grid_size(); ++m)
      csv << i << ',' << io::number(model.asset_grid()[m]) << ',' << io::number(sol.consumption(i, m)) << ','
          << io::number(sol.marginal(i, m)) << ',' << io::number(sol.euler_residual(i, m)) << '\n';
  write_file(dir / "solution.csv", csv.str());
  write_file(dir / "convergence.csv", convergence_csv(sol.report));

  bool ok = true;
  if (args.validate) {
    const SimulationConfig cfg = config_from(*args.validate);
    const double a0 = model.asset_grid()[model.grid_size() / 2];
    result["validation"] = json::array();
    for (int i = 0; i < model.states(); ++i) {
      const Estimate base = simulate_savings_value(model, sol.consumption, i, a0, cfg, 1.0);
      json entry = {{"state", i}, {"a0", a0}, {"estimate", io::estimate_json(base)}, {"perturbations", json::array()}};
      for (double scale : {0.9, 1.1}) {
        const Estimate alt = simulate_savings_value(model, sol.consumption, i, a0, cfg, scale);
        const double slack = 3.0 * std::hypot(base.std_error, alt.std_error);
        const bool dominates = base.mean >= alt.mean - slack;
        ok = ok && dominates;
        entry["perturbations"].push_back(
            {{"scale", scale}, {"estimate", io::estimate_json(alt)}, {"dominated_by_solution", dominates}});
      }
      result["validation"].push_back(std::move(entry));
    }
  }
  return ok ? kOk : kVerificationFailure;
}

int solve_affine_file(const io::AffineModel& model, const SolveArgs& args, const std::filesystem::path& dir,
                      json& result, std::ostream& out) {
  FixedPointResult<Eigen::VectorXd> fp;
  try {
    auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return model.a * v + model.b; };
    fp = perov_iterate(op, Eigen::VectorXd(Eigen::VectorXd::Zero(model.b.size())), ComponentwiseMetric{},
                       model.coefficient, PerovOptions{args.tol, args.max_iterations, false});
  } catch (const DivergenceError& e) {
    result = divergence_json("affine", e.certificate());
    out << io::dump(result);
    write_file(dir / "result.json", io::dump(result));
    return kDivergence;
  }
  const Eigen::Index n = model.b.size();
  const Eigen::VectorXd dense = (Eigen::MatrixXd::Identity(n, n) - model.a).partialPivLu().solve(model.b);
  result["spectral"] = io::certificate_json(spectral_radius(model.coefficient));
  note_convergence(result, fp.report);
  result["solution"] = {{"x", io::vector_json(fp.point)}, {"x_dense", io::vector_json(dense)}};

  std::ostringstream csv;
  csv << "index,x,x_dense\n";
  for (Eigen::Index k = 0; k < n; ++k) csv << k << ',' << io::number(fp.point(k)) << ',' << io::number(dense(k)) << '\n';
  write_file(dir / "solution.csv", csv.str());
  write_file(dir / "convergence.csv", convergence_csv(fp.report));
  return kOk;
}

// ---------------------------------------------------------------------------
// check

BlackwellReport& merge(BlackwellReport& into, const BlackwellReport& r) {
  const bool first = into.monotonicity_checks == 0 && into.discounting_checks == 0;
  into.monotonicity_checks += r.monotonicity_checks;
  into.discounting_checks += r.discounting_checks;
  into.monotonicity_violations += r.monotonicity_violations;
  into.discounting_violations += r.discounting_violations;
  into.worst_monotonicity = first ? r.worst_monotonicity : std::max(into.worst_monotonicity, r.worst_monotonicity);
  into.worst_discounting = first ? r.worst_discounting : std::max(into.worst_discounting, r.worst_discounting);
  return into;
}

// Pairs sample q of each list: (f_q, f_q + h_q) for monotonicity, (f_q, c_q)
// for discounting, (f_q, g_q) for the contraction inequality.
template <typename Op>
json run_checks(const Op& op, const NonnegativeMatrix& b, const std::vector<GridFunction>& fs,
                const std::vector<GridFunction>& gs, const std::vector<Eigen::VectorXd>& cs,
                const std::vector<GridFunction>& hs, bool& passed) {
  BlackwellReport bw;
  std::vector<std::pair<GridFunction, GridFunction>> pairs;
  for (std::size_t q = 0; q < fs.size(); ++q) {
    merge(bw, blackwell_check(op, b, std::span<const GridFunction>(&fs[q], 1), std::span<const Eigen::VectorXd>(&cs[q], 1),
                              std::span<const GridFunction>(&hs[q], 1)));
    pairs.emplace_back(fs[q], gs[q]);
  }
  const ContractionReport cr =
      verify_contraction_empirical(op, RowSupMetric{}, b, std::span<const std::pair<GridFunction, GridFunction>>(pairs));
  passed = bw.ok() && cr.ok();
  return {{"blackwell",
           {{"monotonicity_checks", bw.monotonicity_checks},
            {"monotonicity_violations", bw.monotonicity_violations},
            {"worst_monotonicity", bw.worst_monotonicity},
            {"discounting_checks", bw.discounting_checks},
            {"discounting_violations", bw.discounting_violations},
            {"worst_discounting", bw.worst_discounting}}},
          {"contraction",
           {{"pairs_checked", cr.pairs_checked},
            {"violations", cr.violations},
            {"worst_violation", cr.worst_violation},
            {"worst_pair", cr.worst_pair},
            {"worst_component", cr.worst_component}}},
          {"passed", passed}};
}

}  // namespace

int cmd_spectral(const std::string& matrix_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const NonnegativeMatrix b(io::parse_matrix(io::load_json(matrix_path)));
    const SpectralCertificate cert = spectral_radius(b);
    json result = io::certificate_json(cert);
    result["sup_norm"] = sup_operator_norm(b.matrix());
    result["irreducible"] = is_irreducible(b);
    result["gelfand"] = json::array();
    for (long n = 1; n <= 256; n *= 2) {
      const GelfandEstimate g = gelfand_estimate(b, n);
      result["gelfand"].push_back({{"n", n}, {"estimate", g.value}, {"overflow", g.overflow}});
    }
    out << io::dump(result);
    return static_cast<int>(kOk);
  });
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (!(args.tol > 0.0)) throw InvalidInput("--tol must be positive");
    if (args.max_iterations < 1) throw InvalidInput("--max-iter must be positive");
    if (args.validate && (args.validate->n_paths < 1 || args.validate->horizon < 1)) {
      throw InvalidInput("--validate needs n_paths >= 1 and horizon >= 1");
    }
    const io::ModelFile mf = io::load_model(args.model);
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);

    json result;
    result["kind"] = io::to_string(mf.kind);
    result["model"] = mf.metadata.name;
    result["warnings"] = json::array();
    int code = kOk;
    switch (mf.kind) {
      case io::ModelKind::dp: code = solve_dp_file(std::get<DPModel>(mf.payload), args, dir, result, out); break;
      case io::ModelKind::asset: code = solve_asset_file(std::get<AssetModel>(mf.payload), args, dir, result, out); break;
      case io::ModelKind::savings:
        code = solve_savings_file(std::get<io::SavingsFile>(mf.payload).model, args, dir, result, out);
        break;
      case io::ModelKind::affine:
        code = solve_affine_file(std::get<io::AffineModel>(mf.payload), args, dir, result, out);
        break;
    }
    if (code == kDivergence) return code;
    write_file(dir / "result.json", io::dump(result));
    out << io::dump(result);
    return code;
  });
}

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (args.samples < 1) throw InvalidInput("--samples must be at least 1");
    const io::ModelFile mf = io::load_model(args.model);
    const auto k = static_cast<std::size_t>(args.samples);
    const std::uint64_t seed = args.seed;
    bool passed = false;
    json report;

    switch (mf.kind) {
      case io::ModelKind::dp: {
        const auto& model = std::get<DPModel>(mf.payload);
        const NonnegativeMatrix b = discount_matrix(model);
        const double rho = spectral_radius(b).rho;
        if (!(rho < 1.0)) throw DivergenceError("Bellman operator has rho(B) >= 1", spectral_radius(b));
        const double scale = std::max(1.0, model.utility_bound() / (1.0 - rho));
        auto op = [&model](const GridFunction& v) { return bellman_operator(model, v); };
        const Eigen::Index ni = model.states(), nx = model.grid_size();
        report = run_checks(op, b, sample_grid_functions(ni, nx, k, scale, seed),
                            sample_grid_functions(ni, nx, k, scale, seed + 1), sample_constants(ni, k, scale, seed + 2),
                            sample_nonnegative(ni, nx, k, scale, seed + 3), passed);
        break;
      }
      case io::ModelKind::savings: {
        const auto& model = std::get<io::SavingsFile>(mf.payload).model;
        const NonnegativeMatrix b = contraction_matrix(model);
        auto op = [&model](const GridFunction& f) { return euler_update(model, f); };
        report = run_checks(op, b, sample_savings_candidates(model, k, seed), sample_savings_candidates(model, k, seed + 1),
                            sample_constants(model.states(), k, 1.0, seed + 2),
                            sample_savings_perturbations(model, k, 1.0, seed + 3), passed);
        break;
      }
      case io::ModelKind::asset: {
        const auto& model = std::get<AssetModel>(mf.payload);
        const NonnegativeMatrix b = pricing_matrix(model);
        const Eigen::VectorXd b1 = b.matrix().rowwise().sum();
        auto op = [&](const GridFunction& v) -> GridFunction { return b.matrix() * v + b1; };
        const Eigen::Index ni = model.states();
        report = run_checks(op, b, sample_grid_functions(ni, 1, k, 10.0, seed), sample_grid_functions(ni, 1, k, 10.0, seed + 1),
                            sample_constants(ni, k, 10.0, seed + 2), sample_nonnegative(ni, 1, k, 10.0, seed + 3), passed);
        break;
      }
      case io::ModelKind::affine: {
        const auto& model = std::get<io::AffineModel>(mf.payload);
        auto op = [&](const GridFunction& v) -> GridFunction { return model.a * v + model.b; };
        const Eigen::Index ni = model.b.size();
        report = run_checks(op, model.coefficient, sample_grid_functions(ni, 1, k, 10.0, seed),
                            sample_grid_functions(ni, 1, k, 10.0, seed + 1), sample_constants(ni, k, 10.0, seed + 2),
                            sample_nonnegative(ni, 1, k, 10.0, seed + 3), passed);
        break;
      }
    }
    report["kind"] = io::to_string(mf.kind);
    report["samples"] = args.samples;
    report["seed"] = args.seed;
    out << io::dump(report);
    return passed ? kOk : kVerificationFailure;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const SimulationConfig cfg{args.seed, args.n_paths, args.horizon};
    cfg.validate();
    const io::ModelFile mf = io::load_model(args.model);
    json result;
    result["kind"] = io::to_string(mf.kind);
    result["seed"] = args.seed;
    Estimate est;
    double reference = 0.0;

    switch (mf.kind) {
      case io::ModelKind::dp: {
        const auto& model = std::get<DPModel>(mf.payload);
        const DPSolution sol = solve_dp(model, DPSolveOptions{args.tol, 100000, std::nullopt});
        est = simulate_dp_value(model, sol.policy, args.state, args.x_index, cfg);
        reference = policy_value(model, sol.policy, args.tol)(args.state, args.x_index);
        result["x_index"] = args.x_index;
        break;
      }
      case io::ModelKind::asset: {
        const auto& model = std::get<AssetModel>(mf.payload);
        const Eigen::VectorXd v = pd_ratio_closed_form(model);
        if (args.state < 0 || args.state >= model.states()) throw InvalidInput("--state out of range");
        est = simulate_pd_ratio(model, args.state, cfg);
        reference = v(args.state);
        break;
      }
      case io::ModelKind::savings: {
        const auto& model = std::get<io::SavingsFile>(mf.payload).model;
        SavingsSolveOptions opt;
        opt.tol = args.tol;
        const SavingsSolution sol = solve_savings(model, opt);
        const double a0 = args.wealth.value_or(model.asset_grid()[model.grid_size() / 2]);
        est = simulate_savings_value(model, sol.consumption, args.state, a0, cfg, args.scale);
        result["a0"] = a0;
        result["scale"] = args.scale;
        result["estimate"] = io::estimate_json(est);
        result["state"] = args.state;
        out << io::dump(result);
        return static_cast<int>(kOk);
      }
      case io::ModelKind::affine:
        throw InvalidInput("simulate is not defined for affine models");
    }
    result["state"] = args.state;
    result["estimate"] = io::estimate_json(est);
    result["reference"] = reference;
    result["brackets"] = brackets(est, reference);
    out << io::dump(result);
    return static_cast<int>(kOk);
  });
}

}  // namespace perov::cli
