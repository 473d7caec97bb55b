#pragma once

#include "robust_huber/common.hpp"
#include "robust_huber/config.hpp"
#include "robust_huber/estimators.hpp"
#include "robust_huber/results.hpp"
#include "robust_huber/solver.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace rh {

enum class Scenario {
  regression_n_sweep,
  regression_alpha_sweep,
  regression_gaussian_design,
  pca_n_sweep,
  pca_alpha_sweep,
  matrix_completion,
  lowerbound_phase,
  meta_certificate
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

using GridPoint = std::map<std::string, double>;

struct ExperimentSpec {
  Scenario scenario = Scenario::regression_n_sweep;
  std::map<std::string, std::vector<double>> grid;
  std::map<std::string, double> params;
  std::map<std::string, std::string> options;
  int trials_per_point = 1;
  Seed seed{0};
  double delta = 0.05;
  int threads = 1;
  bool record_timing = false;
  EstimatorConstants constants;
  SolverConfig solver;
  std::map<std::string, double> asserts;

  void validate() const;
  double param(const GridPoint& point, const std::string& key) const;
  double param(const GridPoint& point, const std::string& key, double fallback) const;
  std::string option(const std::string& key, const std::string& fallback) const;
};

// Sections: [experiment], [grid], [params], [options], [estimator], [solver], [assert].
ExperimentSpec spec_from_config(const Config& cfg);

// Cartesian product; keys vary in alphabetical order with the last key fastest.
std::vector<GridPoint> expand_grid(const ExperimentSpec& spec);

// Seed for one trial at one point; depends on the point's values, not its position in the grid.
Seed trial_seed(const ExperimentSpec& spec, const GridPoint& point, int trial);

RegressionProblem make_regression_instance(const ExperimentSpec& spec, const GridPoint& point, int trial);
PcaProblem make_pca_instance(const ExperimentSpec& spec, const GridPoint& point, int trial);

ResultRow run_trial(const ExperimentSpec& spec, const GridPoint& point, int trial);

// Rows come back sorted by (grid point, trial). on_row, if given, sees each row as it finishes.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec,
                                      const std::function<void(const ResultRow&)>& on_row = {});

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit residuals
  std::vector<std::pair<double, double>> medians;  // (x, median y) per distinct x
};

// Least squares through (log x, log median y); x may be a point param or a metric,
// y a metric or a flag (as 0/1).
SlopeFit fit_loglog_slope(const std::vector<ResultRow>& rows, const std::string& x_field, const std::string& y_field);

std::string primary_metric(Scenario s);

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};
std::vector<Assertion> evaluate_assertions(const ExperimentSpec& spec, const std::vector<ResultRow>& rows);

std::string format_report(const ExperimentSpec& spec, const std::vector<ResultRow>& rows,
                          const std::vector<Assertion>& assertions);
void emit_report(const ExperimentSpec& spec, const std::vector<ResultRow>& rows,
                 const std::vector<Assertion>& assertions, const std::string& path);
void emit_gnuplot(const ExperimentSpec& spec, const std::vector<ResultRow>& rows, const std::string& csv_path,
                  const std::string& gp_path);

double median(std::vector<double> v);

}  // namespace rh
