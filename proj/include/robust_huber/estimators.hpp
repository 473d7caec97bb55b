#pragma once

#include "robust_huber/common.hpp"
#include "robust_huber/huber.hpp"
#include "robust_huber/solver.hpp"

#include <optional>
#include <vector>

namespace rh {

struct SparseTruth {
  Vector beta;
  std::vector<Index> support;  // sorted
  Index k = 0;
};

struct DesignProps {
  double lambda = 1.0;  // restricted eigenvalue constant
  double nu = 1.0;      // column-norm bound: ||X_j|| <= sqrt(nu n)
  Index m = 0;          // well-spread set size
};

struct RegressionProblem {
  Matrix X;
  Vector y;
  std::optional<SparseTruth> truth;
  std::optional<DesignProps> design;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }
  void validate() const;
};

struct LowRankTruth {
  Matrix L;
  Index r = 0;
};

struct PcaProblem {
  Matrix Y;
  double rho_over_n = 1.0;
  double zeta = 0.0;
  std::optional<LowRankTruth> truth;

  Index n() const { return Y.rows(); }
  void validate() const;
};

struct EstimatorConstants {
  double gamma_scale = 100.0;
  std::optional<double> huber_h_override;
  // Bypasses gamma_scale entirely; used for the gamma = 0 interpolation checks.
  std::optional<double> gamma_override;
  void validate() const;
};

struct RegressionFit {
  Vector beta;
  SolveResult solve;
  double gamma = 0.0;
  std::optional<bool> certified;  // set when truth is present
};

struct PcaFit {
  Matrix L;
  SolveResult solve;
  double gamma = 0.0;
  double h = 0.0;
  std::optional<bool> certified;
};

double regression_gamma(const RegressionProblem& p, const EstimatorConstants& c);
double pca_gamma(const PcaProblem& p, const EstimatorConstants& c);
double pca_huber_h(const PcaProblem& p, const EstimatorConstants& c);

// Composite problems behind the estimators; exposed for verification and tests.
CompositeProblem regression_composite(const RegressionProblem& p, double gamma, double lipschitz = 0.0);
CompositeProblem pca_composite(const PcaProblem& p, double gamma, double h);

RegressionFit estimate_sparse_regression(const RegressionProblem& p, const EstimatorConstants& c,
                                         const SolverConfig& cfg);
PcaFit estimate_pca(const PcaProblem& p, const EstimatorConstants& c, const SolverConfig& cfg);

double prediction_error(const RegressionProblem& p, const Vector& beta_hat);
double parameter_error(const RegressionProblem& p, const Vector& beta_hat);
double frobenius_error(const PcaProblem& p, const Matrix& L_hat);

}  // namespace rh
