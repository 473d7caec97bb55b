#include "robust_huber/config.hpp"
#include "robust_huber/experiments.hpp"
#include "robust_huber/results.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rh;

namespace {

const char* kSmallSweep = R"(
[experiment]
scenario = regression_n_sweep
trials_per_point = 3
seed = 77

[grid]
n = 60, 120

[params]
d = 10
k = 2
alpha = 0.5
zeta = 1
magnitude = 1

[options]
design = identity

[estimator]
gamma_scale = 2

[solver]
rel_tol = 1e-8
)";

ExperimentSpec small_spec() { return spec_from_config(Config::parse(kSmallSweep)); }

ResultRow synthetic_row(double x, double y, int trial) {
  ResultRow r;
  r.scenario = "regression_n_sweep";
  r.point["n"] = x;
  r.trial = trial;
  r.metrics["prediction_error"] = y;
  return r;
}

}  // namespace

TEST(ConfigParse, RejectsMalformedText) {
  EXPECT_THROW(Config::parse("[experiment\nscenario = x\n"), ConfigError);
  EXPECT_THROW(Config::parse("[a]\nno equals sign\n"), ConfigError);
  EXPECT_THROW(Config::parse("[a]\nk = 1\nk = 2\n"), ConfigError);
  EXPECT_THROW(parse_number("1.5x", "test"), ConfigError);
}

TEST(ConfigParse, RejectsBadSpecs) {
  EXPECT_THROW(spec_from_config(Config::parse("[experiment]\nscenario = nope\n[grid]\nn = 1\n")), ConfigError);
  EXPECT_THROW(spec_from_config(Config::parse("[experiment]\nscenario = pca_n_sweep\n")), ConfigError);
  EXPECT_THROW(spec_from_config(Config::parse(
                   "[experiment]\nscenario = pca_n_sweep\ntrials_per_point = 0\n[grid]\nn = 10\n")),
               ConfigError);
  EXPECT_THROW(
      spec_from_config(Config::parse("[experiment]\nscenario = pca_n_sweep\nseed = -3\n[grid]\nn = 10\n")),
      ConfigError);
}

TEST(ConfigParse, ReadsAllSections) {
  ExperimentSpec s = small_spec();
  EXPECT_EQ(s.scenario, Scenario::regression_n_sweep);
  EXPECT_EQ(s.trials_per_point, 3);
  EXPECT_EQ(s.seed.value, 77u);
  EXPECT_EQ(s.grid.at("n"), (std::vector<double>{60, 120}));
  EXPECT_DOUBLE_EQ(s.params.at("d"), 10.0);
  EXPECT_EQ(s.option("design", "toeplitz"), "identity");
  EXPECT_DOUBLE_EQ(s.constants.gamma_scale, 2.0);
  EXPECT_DOUBLE_EQ(s.solver.rel_tol, 1e-8);
}

TEST(Grid, CartesianProductOrder) {
  ExperimentSpec s = small_spec();
  s.grid = {{"b", {1, 2}}, {"a", {10, 20, 30}}};
  auto pts = expand_grid(s);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0], (GridPoint{{"a", 10}, {"b", 1}}));
  EXPECT_EQ(pts[1], (GridPoint{{"a", 10}, {"b", 2}}));
  EXPECT_EQ(pts[5], (GridPoint{{"a", 30}, {"b", 2}}));
}

TEST(Csv, RoundTrip) {
  ResultRow a;
  a.scenario = "pca_n_sweep";
  a.point = {{"n", 50}, {"alpha", 0.8}};
  a.trial = 4;
  a.metrics = {{"frobenius_error", 0.1 + 0.2}, {"gamma", 1e-300}, {"z", std::nan("")}};
  a.iterations = 123;
  a.flags = {{"certified", true}, {"converged", false}};
  a.wall_ms = 0.0;
  ResultRow b = a;
  b.trial = 5;
  b.metrics["z"] = std::numeric_limits<double>::infinity();
  b.error = "boom";
  auto back = parse_csv(format_csv({a, b}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].point, a.point);
  EXPECT_EQ(back[0].metrics.at("frobenius_error"), a.metrics.at("frobenius_error"));
  EXPECT_EQ(back[0].metrics.at("gamma"), 1e-300);
  EXPECT_TRUE(std::isnan(back[0].metrics.at("z")));
  EXPECT_EQ(back[1].metrics.at("z"), b.metrics.at("z"));
  EXPECT_EQ(back[0].flags, a.flags);
  EXPECT_EQ(back[0].iterations, 123);
  EXPECT_EQ(back[1].error, "boom");
  EXPECT_EQ(format_csv(back), format_csv({a, b}));
}

TEST(Csv, EmptyIsHeaderOnly) {
  std::string text = format_csv({});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_TRUE(parse_csv(text).empty());
}

TEST(Csv, RejectsColumnCollisions) {
  ResultRow a;
  a.scenario = "x";
  a.point["gamma"] = 1.0;
  a.metrics["gamma"] = 2.0;
  EXPECT_THROW(format_csv({a}), PreconditionError);
  ResultRow b;
  b.scenario = "x";
  b.metrics["error"] = 1.0;
  EXPECT_THROW(format_csv({b}), PreconditionError);
}

TEST(Slope, ExactPowerLaws) {
  std::vector<ResultRow> rows;
  for (double x : {1.0, 2.0, 4.0, 8.0}) rows.push_back(synthetic_row(x, 4.0 / x, 0));
  SlopeFit f = fit_loglog_slope(rows, "n", "prediction_error");
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(4.0), 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);

  rows.clear();
  for (double x : {3.0, 30.0, 300.0}) rows.push_back(synthetic_row(x, 7.0 / (x * x), 0));
  EXPECT_NEAR(fit_loglog_slope(rows, "n", "prediction_error").slope, -2.0, 1e-12);
}

TEST(Slope, NoisyPowerLawUsesMedians) {
  std::vector<ResultRow> rows;
  Rng rng = make_rng(Seed{5});
  std::normal_distribution<double> z(0.0, 0.05);
  for (double x : {100.0, 200.0, 400.0, 800.0, 1600.0})
    for (int t = 0; t < 21; ++t) rows.push_back(synthetic_row(x, 3.0 * std::pow(x, 0.5) * std::exp(z(rng)), t));
  EXPECT_NEAR(fit_loglog_slope(rows, "n", "prediction_error").slope, 0.5, 0.05);
}

TEST(Slope, RejectsDegenerateInput) {
  std::vector<ResultRow> rows{synthetic_row(1.0, 1.0, 0), synthetic_row(1.0, 2.0, 1)};
  EXPECT_THROW(fit_loglog_slope(rows, "n", "prediction_error"), PreconditionError);
  rows.push_back(synthetic_row(2.0, 0.0, 0));
  EXPECT_THROW(fit_loglog_slope(rows, "n", "prediction_error"), DomainError);
}

TEST(Run, SinglePointSingleTrial) {
  ExperimentSpec s = small_spec();
  s.grid = {{"n", {80}}};
  s.trials_per_point = 1;
  auto rows = run_experiment(s);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].error.empty()) << rows[0].error;
  EXPECT_GE(rows[0].metrics.at("prediction_error"), 0.0);
}

TEST(Run, ByteIdenticalAcrossRunsAndThreads) {
  ExperimentSpec s = small_spec();
  std::string first = format_csv(run_experiment(s));
  EXPECT_EQ(first, format_csv(run_experiment(s)));
  s.threads = 3;
  EXPECT_EQ(first, format_csv(run_experiment(s)));
}

TEST(Run, RestrictedGridReproducesRows) {
  ExperimentSpec s = small_spec();
  auto full = run_experiment(s);
  s.grid = {{"n", {120}}};
  auto sub = run_experiment(s);
  std::vector<ResultRow> expected;
  for (const auto& r : full)
    if (r.point.at("n") == 120) expected.push_back(r);
  EXPECT_EQ(format_csv(sub), format_csv(expected));
}

TEST(Run, TrialErrorsAreRecorded) {
  ExperimentSpec s = small_spec();
  s.grid = {{"n", {40}}};
  s.params["k"] = 50;  // k > d
  auto rows = run_experiment(s);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_FALSE(r.error.empty());
    EXPECT_TRUE(r.metrics.empty());
  }
  auto checks = evaluate_assertions(s, rows);
  bool complete_failed = false;
  for (const auto& a : checks)
    if (a.name == "rows_complete") complete_failed = !a.pass;
  EXPECT_TRUE(complete_failed);
}

TEST(Median, EvenAndOdd) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
}
