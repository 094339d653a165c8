#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "perov/commands.hpp"
#include "perov/model_io.hpp"
#include "test_support.hpp"

namespace perov::cli {
namespace {

using io::json;
namespace fs = std::filesystem;
using testing::fixture;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

template <typename Fn>
Run run(Fn&& fn) {
  std::ostringstream out, err;
  Run r;
  r.code = fn(out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("perov_cmd_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TEST(Spectral, Fixtures) {
  auto r = run([](auto& o, auto& e) { return cmd_spectral(fixture("matrix_half.json"), o, e); });
  ASSERT_EQ(r.code, kOk);
  EXPECT_DOUBLE_EQ(r.doc()["rho"].get<double>(), 0.5);

  r = run([](auto& o, auto& e) { return cmd_spectral(fixture("matrix_nilpotent.json"), o, e); });
  ASSERT_EQ(r.code, kOk);
  const json d = r.doc();
  EXPECT_EQ(d["rho"].get<double>(), 0.0);
  EXPECT_EQ(d["gelfand"][0]["estimate"].get<double>(), 2.0);
  EXPECT_EQ(d["gelfand"][1]["estimate"].get<double>(), 0.0);
  EXPECT_EQ(d["gelfand"].size(), 9u);
  EXPECT_EQ(d["gelfand"][8]["n"], 256);

  r = run([](auto& o, auto& e) { return cmd_spectral(fixture("matrix_stochastic.json"), o, e); });
  EXPECT_NEAR(r.doc()["rho"].get<double>(), 1.0, 1e-10);
}

TEST(Spectral, ParseErrors) {
  EXPECT_EQ(run([](auto& o, auto& e) { return cmd_spectral("/nonexistent.json", o, e); }).code, kInputError);
  EXPECT_EQ(run([](auto& o, auto& e) { return cmd_spectral(fixture("gordon.json"), o, e); }).code, kInputError);
}

TEST(Solve, Gordon) {
  const fs::path dir = scratch("gordon");
  SolveArgs args{fixture("gordon.json"), 1e-12, 100000, dir.string(), std::nullopt};
  const auto r = run([&](auto& o, auto& e) { return cmd_solve(args, o, e); });
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NEAR(r.doc()["v"][0].get<double>(), 19.0, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "solution.csv"));
  EXPECT_TRUE(fs::exists(dir / "convergence.csv"));
  EXPECT_EQ(json::parse(slurp(dir / "result.json")), r.doc());
}

TEST(Solve, TwoStateDp) {
  const fs::path dir = scratch("dp");
  SolveArgs args{fixture("dp_two_state.json"), 1e-10, 100000, dir.string(), ValidateArgs{2000, 100, 3}};
  const auto r = run([&](auto& o, auto& e) { return cmd_solve(args, o, e); });
  ASSERT_EQ(r.code, kOk) << r.err;
  const json d = r.doc();
  for (const auto& row : d["solution"]["V"])
    for (const auto& v : row) EXPECT_NEAR(v.get<double>(), 2.857143, 1e-6);
  EXPECT_EQ(d["status"], "solved");
  EXPECT_EQ(d["convergence"]["terminated"], "tolerance_met");
  ASSERT_EQ(d["validation"].size(), 2u);
  EXPECT_TRUE(d["validation"][0]["brackets"].get<bool>());
  const std::string csv = slurp(dir / "solution.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "state,x_index,x_value,V,y_choice");
}

TEST(Solve, DivergentAssetCertificate) {
  const fs::path dir = scratch("divergent");
  SolveArgs args{fixture("asset_divergent.json"), 1e-10, 1000, dir.string(), std::nullopt};
  const auto r = run([&](auto& o, auto& e) { return cmd_solve(args, o, e); });
  ASSERT_EQ(r.code, kDivergence);
  const json d = r.doc();
  EXPECT_EQ(d["status"], "divergent");
  EXPECT_GT(d["certificate"]["perron_mass"].get<double>(), 0.0);
  EXPECT_GT(d["certificate"]["partial_sum_min"].get<double>(), 50.0);
  EXPECT_TRUE(fs::exists(dir / "result.json"));
}

TEST(Solve, IterationCapIsAWarning) {
  const fs::path dir = scratch("cap");
  SolveArgs args{fixture("dp_cake.json"), 1e-10, 3, dir.string(), std::nullopt};
  const auto r = run([&](auto& o, auto& e) { return cmd_solve(args, o, e); });
  ASSERT_EQ(r.code, kOk);
  EXPECT_EQ(r.doc()["status"], "not_converged");
  EXPECT_EQ(r.doc()["warnings"].size(), 1u);
}

TEST(Solve, InputErrors) {
  SolveArgs args{fixture("bad_version.json"), 1e-10, 100, scratch("bad").string(), std::nullopt};
  EXPECT_EQ(run([&](auto& o, auto& e) { return cmd_solve(args, o, e); }).code, kInputError);
  args.model = fixture("gordon.json");
  args.tol = -1.0;
  EXPECT_EQ(run([&](auto& o, auto& e) { return cmd_solve(args, o, e); }).code, kInputError);
}

TEST(Solve, Affine) {
  SolveArgs args{fixture("affine_small.json"), 1e-12, 1000, scratch("affine").string(), std::nullopt};
  const auto r = run([&](auto& o, auto& e) { return cmd_solve(args, o, e); });
  ASSERT_EQ(r.code, kOk);
  const json d = r.doc();
  for (int k = 0; k < 2; ++k)
    EXPECT_NEAR(d["solution"]["x"][k].get<double>(), d["solution"]["x_dense"][k].get<double>(), 1e-10);
  args.model = fixture("affine_divergent.json");
  EXPECT_EQ(run([&](auto& o, auto& e) { return cmd_solve(args, o, e); }).code, kDivergence);
}

TEST(Check, DpPasses) {
  const auto r = run([](auto& o, auto& e) { return cmd_check(CheckArgs{fixture("dp_cake.json"), 100, 1}, o, e); });
  ASSERT_EQ(r.code, kOk) << r.out;
  EXPECT_EQ(r.doc()["contraction"]["pairs_checked"], 100);
}

TEST(Check, NonMonotoneFails) {
  const auto r =
      run([](auto& o, auto& e) { return cmd_check(CheckArgs{fixture("affine_nonmonotone.json"), 20, 1}, o, e); });
  EXPECT_EQ(r.code, kVerificationFailure);
  EXPECT_GT(r.doc()["blackwell"]["monotonicity_violations"].get<int>(), 0);
}

TEST(Check, ZeroSamplesIsUsageError) {
  EXPECT_EQ(run([](auto& o, auto& e) { return cmd_check(CheckArgs{fixture("dp_cake.json"), 0, 1}, o, e); }).code,
            kInputError);
}

TEST(Simulate, GordonBrackets) {
  SimulateArgs args;
  args.model = fixture("gordon.json");
  args.n_paths = 1000;
  const auto r = run([&](auto& o, auto& e) { return cmd_simulate(args, o, e); });
  ASSERT_EQ(r.code, kOk);
  EXPECT_TRUE(r.doc()["brackets"].get<bool>());
  args.model = fixture("affine_small.json");
  EXPECT_EQ(run([&](auto& o, auto& e) { return cmd_simulate(args, o, e); }).code, kInputError);
  args.model = fixture("gordon.json");
  args.state = 3;
  EXPECT_EQ(run([&](auto& o, auto& e) { return cmd_simulate(args, o, e); }).code, kInputError);
}

TEST(Simulate, Deterministic) {
  SimulateArgs args;
  args.model = fixture("dp_cake.json");
  args.n_paths = 500;
  args.seed = 99;
  const auto a = run([&](auto& o, auto& e) { return cmd_simulate(args, o, e); });
  const auto b = run([&](auto& o, auto& e) { return cmd_simulate(args, o, e); });
  EXPECT_EQ(a.out, b.out);
  args.seed = 100;
  EXPECT_NE(a.out, run([&](auto& o, auto& e) { return cmd_simulate(args, o, e); }).out);
}

}  // namespace
}  // namespace perov::cli
