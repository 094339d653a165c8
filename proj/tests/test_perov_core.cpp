#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perov/detail/parallel.hpp"
#include "perov/perov_core.hpp"
#include "test_support.hpp"

namespace perov {
namespace {

struct Affine {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const { return a * v + b; }
  GridFunction operator()(const GridFunction& v) const { return a * v + b.replicate(1, v.cols()); }
};

// |x_i - y_i|^2 breaks the triangle inequality.
struct SquaredMetric {
  VectorDistance operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return VectorDistance((x - y).array().square().matrix());
  }
};

TEST(Metrics, AxiomsHold) {
  std::vector<Eigen::VectorXd> pts;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 6; ++k) {
    Eigen::VectorXd v(3);
    for (int i = 0; i < 3; ++i) v(i) = n(rng);
    pts.push_back(v);
  }
  EXPECT_TRUE(metric_axiom_check(ComponentwiseMetric{}, std::span<const Eigen::VectorXd>(pts)).ok());

  std::vector<GridFunction> fs;
  for (int k = 0; k < 5; ++k) fs.push_back(GridFunction::Random(2, 4));
  EXPECT_TRUE(metric_axiom_check(RowSupMetric{}, std::span<const GridFunction>(fs)).ok());
}

TEST(Metrics, TriangleViolationDetected) {
  std::vector<Eigen::VectorXd> pts{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0),
                                   Eigen::VectorXd::Constant(1, 2.0)};
  const auto rep = metric_axiom_check(SquaredMetric{}, std::span<const Eigen::VectorXd>(pts));
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations.front().kind, AxiomViolation::Kind::triangle);
  EXPECT_DOUBLE_EQ(rep.violations.front().amount, 2.0);
}

TEST(Metrics, NeedsThreePoints) {
  std::vector<Eigen::VectorXd> pts(2, Eigen::VectorXd::Zero(1));
  EXPECT_THROW(metric_axiom_check(ComponentwiseMetric{}, std::span<const Eigen::VectorXd>(pts)), InvalidInput);
}

TEST(RowSupMetric, PerRowMaximum) {
  GridFunction f(2, 3), g(2, 3);
  f << 1, 2, 3, 0, 0, 0;
  g << 1, 0, 3, 0, -4, 1;
  const auto d = RowSupMetric{}(f, g);
  EXPECT_DOUBLE_EQ(d[0], 2.0);
  EXPECT_DOUBLE_EQ(d[1], 4.0);
  EXPECT_DOUBLE_EQ(d.sup_norm(), 4.0);
}

TEST(PerovIterate, MatchesDenseSolve) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index n = 1 + t % 10;
    const auto b = testing::random_discount_matrix(rng, n, 0.95);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = u(rng);
    const Affine op{b.matrix(), c};
    const auto res = perov_iterate(op, Eigen::VectorXd(Eigen::VectorXd::Zero(n)), ComponentwiseMetric{}, b,
                                   PerovOptions{1e-11, 100000, false});
    const Eigen::VectorXd exact = (Eigen::MatrixXd::Identity(n, n) - b.matrix()).partialPivLu().solve(c);
    EXPECT_EQ(res.report.terminated, Termination::tolerance_met);
    EXPECT_LT((res.point - exact).cwiseAbs().maxCoeff(), 1e-9);
    // The a posteriori bound covers the true error.
    EXPECT_LE((res.point - exact).cwiseAbs().maxCoeff(), res.report.error_bound + 1e-15);
    EXPECT_TRUE(res.report.rate_certified);
  }
}

TEST(PerovIterate, RefusesUnitRadius) {
  Eigen::MatrixXd m(2, 2);
  m << 0.5, 0.5, 0.5, 0.5;
  const Affine op{m, Eigen::VectorXd::Ones(2)};
  EXPECT_THROW(perov_iterate(op, Eigen::VectorXd(Eigen::VectorXd::Zero(2)), ComponentwiseMetric{}, NonnegativeMatrix(m)),
               DivergenceError);
}

TEST(PerovIterate, StopsAtIterationCap) {
  const NonnegativeMatrix b(Eigen::MatrixXd::Constant(1, 1, 0.99));
  const Affine op{b.matrix(), Eigen::VectorXd::Ones(1)};
  const auto res = perov_iterate(op, Eigen::VectorXd(Eigen::VectorXd::Zero(1)), ComponentwiseMetric{}, b,
                                 PerovOptions{1e-12, 7, true});
  EXPECT_EQ(res.report.terminated, Termination::max_iterations);
  EXPECT_EQ(res.report.iterations, 7);
  EXPECT_EQ(res.iterates.size(), 8u);
}

TEST(PerovIterate, NonFiniteStepsMarkDivergence) {
  const NonnegativeMatrix b(Eigen::MatrixXd::Constant(1, 1, 0.5));
  auto op = [](const Eigen::VectorXd& v) -> Eigen::VectorXd { return v.array() + std::numeric_limits<double>::infinity(); };
  const auto res = perov_iterate(op, Eigen::VectorXd(Eigen::VectorXd::Zero(1)), ComponentwiseMetric{}, b);
  EXPECT_EQ(res.report.terminated, Termination::diverged);
}

TEST(PerovIterate, ConvergenceCsv) {
  const NonnegativeMatrix b(Eigen::MatrixXd::Identity(2, 2) * 0.5);
  const Affine op{b.matrix(), Eigen::VectorXd::Ones(2)};
  const auto res = perov_iterate(op, Eigen::VectorXd(Eigen::VectorXd::Zero(2)), ComponentwiseMetric{}, b,
                                 PerovOptions{1e-3, 100, false});
  std::ostringstream os;
  write_convergence_csv(os, res.report);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "iteration,d_1,d_2,sup_norm");
  std::getline(is, line);
  EXPECT_EQ(line, "1,1,1,1");
  std::getline(is, line);
  EXPECT_EQ(line, "2,0.5,0.5,0.5");
}

TEST(RateFit, GeometricTrace) {
  std::vector<double> trace;
  for (int n = 0; n < 20; ++n) trace.push_back(3.0 * std::pow(0.5, n));
  const auto fit = convergence_rate_fit(std::span<const double>(trace), 0.5, 0.5);
  EXPECT_TRUE(fit.contracting);
  EXPECT_NEAR(fit.constant, 3.0, 1e-12);
  const auto slow = convergence_rate_fit(std::span<const double>(trace), 0.5);
  EXPECT_DOUBLE_EQ(slow.beta, 0.75);
  EXPECT_NEAR(slow.constant, 3.0, 1e-12);
}

TEST(RateFit, RejectsShortOrDivergentTraces) {
  std::vector<double> tiny{1.0, 0.5};
  EXPECT_THROW(convergence_rate_fit(std::span<const double>(tiny), 0.5), InvalidInput);
  std::vector<double> growing{1, 2, 3, 4, 5, 6};
  EXPECT_FALSE(convergence_rate_fit(std::span<const double>(growing), 0.5).contracting);
  std::vector<double> nan{1, 0.5, std::nan(""), 0.1, 0.05};
  EXPECT_FALSE(convergence_rate_fit(std::span<const double>(nan), 0.5).contracting);
  std::vector<double> fine{1, 0.5, 0.25, 0.125, 0.0625};
  EXPECT_THROW(convergence_rate_fit(std::span<const double>(fine), 1.0), InvalidInput);
}

TEST(ContractionCheck, AffineOperatorPasses) {
  std::mt19937_64 rng(9);
  const auto b = testing::random_discount_matrix(rng, 4, 0.9);
  const Affine op{b.matrix(), Eigen::VectorXd::Ones(4)};
  std::vector<std::pair<GridFunction, GridFunction>> pairs;
  for (int k = 0; k < 30; ++k) pairs.emplace_back(GridFunction::Random(4, 3), GridFunction::Random(4, 3));
  const auto rep = verify_contraction_empirical(
      op, RowSupMetric{}, b, std::span<const std::pair<GridFunction, GridFunction>>(pairs));
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.pairs_checked, 30u);
}

TEST(ContractionCheck, TooSmallCoefficientFails) {
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.3, 0.2, 0.4;
  const Affine op{a, Eigen::VectorXd::Zero(2)};
  const NonnegativeMatrix small(a * 0.5);
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs{{Eigen::VectorXd::Ones(2), Eigen::VectorXd::Zero(2)}};
  const auto rep = verify_contraction_empirical(
      op, ComponentwiseMetric{}, small, std::span<const std::pair<Eigen::VectorXd, Eigen::VectorXd>>(pairs));
  EXPECT_FALSE(rep.ok());
  EXPECT_NEAR(rep.worst_violation, 0.4, 1e-12);
}

TEST(Blackwell, MonotoneDiscountedOperatorPasses) {
  std::mt19937_64 rng(10);
  const auto b = testing::random_discount_matrix(rng, 3, 0.9);
  const Affine op{b.matrix(), Eigen::VectorXd::Ones(3)};
  std::vector<GridFunction> fs{GridFunction::Random(3, 2), GridFunction::Random(3, 2)};
  std::vector<Eigen::VectorXd> cs{Eigen::VectorXd::Constant(3, 0.5), Eigen::VectorXd::LinSpaced(3, 0.0, 2.0)};
  const auto rep = blackwell_check(op, b, std::span<const GridFunction>(fs), std::span<const Eigen::VectorXd>(cs));
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.monotonicity_checks, 4u);
  EXPECT_EQ(rep.discounting_checks, 4u);
}

TEST(Blackwell, NonMonotoneOperatorFails) {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, -0.5, -0.5, 0.0;
  const Affine op{a, Eigen::VectorXd::Ones(2)};
  const NonnegativeMatrix b(a.cwiseAbs());
  std::vector<GridFunction> fs{GridFunction::Zero(2, 1)};
  std::vector<Eigen::VectorXd> cs{Eigen::VectorXd::Ones(2)};
  const auto rep = blackwell_check(op, b, std::span<const GridFunction>(fs), std::span<const Eigen::VectorXd>(cs));
  EXPECT_EQ(rep.monotonicity_violations, 1u);
  EXPECT_EQ(rep.discounting_violations, 0u);
  EXPECT_NEAR(rep.worst_monotonicity, 0.5, 1e-12);
}

TEST(Blackwell, RejectsNegativePerturbations) {
  const NonnegativeMatrix b(Eigen::MatrixXd::Identity(1, 1) * 0.5);
  const Affine op{b.matrix(), Eigen::VectorXd::Zero(1)};
  std::vector<GridFunction> fs{GridFunction::Zero(1, 1)};
  std::vector<Eigen::VectorXd> cs{Eigen::VectorXd::Constant(1, -1.0)};
  EXPECT_THROW(blackwell_check(op, b, std::span<const GridFunction>(fs), std::span<const Eigen::VectorXd>(cs)),
               InvalidInput);
}

TEST(Parallel, WorkerExceptionsReachCaller) {
  ::setenv("PEROV_THREADS", "4", 1);
  std::vector<int> seen(1000, 0);
  EXPECT_THROW(detail::parallel_for(1000, [&](long k) {
    seen[k] = 1;
    if (k == 999) throw NumericError("boom");
  }),
               NumericError);
  detail::parallel_for(1000, [&](long k) { seen[k] = 2; });
  ::unsetenv("PEROV_THREADS");
  EXPECT_EQ(std::count(seen.begin(), seen.end(), 2), 1000);
}

}  // namespace
}  // namespace perov
