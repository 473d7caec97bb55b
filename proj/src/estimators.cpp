#include "robust_huber/estimators.hpp"

#include <cmath>

namespace rh {

void RegressionProblem::validate() const {
  require(X.rows() == y.size(), "regression: X and y disagree on n");
  require(X.allFinite() && y.allFinite(), "regression: non-finite data");
  if (truth) {
    require(truth->beta.size() == X.cols(), "regression: truth has the wrong dimension");
    require(static_cast<Index>(truth->support.size()) == truth->k, "regression: |support| != k");
    std::vector<bool> on(X.cols(), false);
    for (Index j : truth->support) {
      require(j >= 0 && j < X.cols(), "regression: support index out of range");
      on[j] = true;
    }
    for (Index j = 0; j < X.cols(); ++j)
      require(on[j] || truth->beta[j] == 0.0, "regression: truth is nonzero off its support");
  }
}

void PcaProblem::validate() const {
  require(Y.rows() == Y.cols(), "pca: observation must be square");
  require(Y.rows() >= 2, "pca: n must be at least 2");
  require(rho_over_n > 0.0, "pca: rho/n must be positive");
  require(zeta >= 0.0, "pca: zeta must be non-negative");
  require(Y.allFinite(), "pca: non-finite observation");
  if (truth) {
    require(truth->L.rows() == Y.rows() && truth->L.cols() == Y.cols(), "pca: truth has the wrong shape");
    require(truth->L.cwiseAbs().maxCoeff() <= rho_over_n + 1e-12, "pca: truth violates the max-norm bound");
  }
}

void EstimatorConstants::validate() const {
  require(gamma_scale > 0.0, "estimator: gamma_scale must be positive");
  if (huber_h_override) require(*huber_h_override > 0.0, "estimator: h override must be positive");
  if (gamma_override) require(*gamma_override >= 0.0, "estimator: gamma override must be non-negative");
}

double regression_gamma(const RegressionProblem& p, const EstimatorConstants& c) {
  if (c.gamma_override) return *c.gamma_override;
  return c.gamma_scale * std::sqrt(static_cast<double>(p.n()) * std::log(static_cast<double>(p.d())));
}

double pca_huber_h(const PcaProblem& p, const EstimatorConstants& c) {
  return c.huber_h_override ? *c.huber_h_override : p.zeta + p.rho_over_n;
}

double pca_gamma(const PcaProblem& p, const EstimatorConstants& c) {
  if (c.gamma_override) return *c.gamma_override;
  return c.gamma_scale * std::sqrt(static_cast<double>(p.n())) * (p.zeta + p.rho_over_n);
}

CompositeProblem regression_composite(const RegressionProblem& p, double gamma, double lipschitz) {
  CompositeProblem cp;
  const Matrix* X = &p.X;
  const Vector* y = &p.y;
  HuberParams hp(2.0);
  cp.smooth_eval = [X, y, hp](const Matrix& beta, Matrix* grad) {
    Vector r = *y - *X * beta.col(0);
    double v = huber_loss(r, hp);
    if (grad) *grad = -(X->transpose() * huber_loss_grad(r, hp));
    return v;
  };
  cp.prox = [gamma](const Matrix& v, double step) -> Matrix { return prox_l1(v.col(0), step * gamma); };
  cp.regularizer = [gamma](const Matrix& v) { return gamma * v.cwiseAbs().sum(); };
  cp.rows = p.d();
  cp.cols = 1;
  cp.lipschitz = lipschitz;
  return cp;
}

CompositeProblem pca_composite(const PcaProblem& p, double gamma, double h) {
  CompositeProblem cp;
  const Matrix* Y = &p.Y;
  HuberParams hp(h);
  cp.smooth_eval = [Y, hp](const Matrix& L, Matrix* grad) {
    Matrix r = *Y - L;
    double v = huber_loss(r, hp);
    if (grad) *grad = -huber_loss_grad(r, hp);
    return v;
  };
  cp.prox = [gamma](const Matrix& v, double step) { return prox_nuclear(v, step * gamma); };
  cp.regularizer = [gamma](const Matrix& v) { return gamma == 0.0 ? 0.0 : gamma * nuclear_norm(v); };
  cp.constraint = MaxNormBall(p.rho_over_n);
  cp.rows = p.n();
  cp.cols = p.n();
  cp.lipschitz = 1.0;
  return cp;
}

RegressionFit estimate_sparse_regression(const RegressionProblem& p, const EstimatorConstants& c,
                                         const SolverConfig& cfg) {
  require(p.d() >= 2, "regression: d must be at least 2");
  p.validate();
  c.validate();
  RegressionFit fit;
  fit.gamma = regression_gamma(p, c);
  double nrm = spectral_norm_power(p.X);
  // Slight inflation guards against the power-iteration underestimate; backtracking handles the rest.
  auto cp = regression_composite(p, fit.gamma, nrm > 0.0 ? 1.01 * nrm * nrm : 0.0);
  fit.solve = solve_fista(cp, cfg, Matrix::Zero(p.d(), 1));
  fit.beta = fit.solve.point.col(0);
  if (p.truth) {
    fit.certified = certify_against_reference(cp, fit.solve.point, Matrix(p.truth->beta),
                                              cfg.objective_reference_margin);
    fit.solve.reference_dominated = *fit.certified;
  }
  return fit;
}

PcaFit estimate_pca(const PcaProblem& p, const EstimatorConstants& c, const SolverConfig& cfg) {
  p.validate();
  c.validate();
  PcaFit fit;
  fit.h = pca_huber_h(p, c);
  fit.gamma = pca_gamma(p, c);
  auto cp = pca_composite(p, fit.gamma, fit.h);
  fit.solve = solve_split(cp, cfg, project_maxnorm(p.Y, p.rho_over_n));
  fit.L = fit.solve.point;
  if (p.truth) {
    fit.certified = certify_against_reference(cp, fit.L, p.truth->L, cfg.objective_reference_margin);
    fit.solve.reference_dominated = *fit.certified;
  }
  return fit;
}

double prediction_error(const RegressionProblem& p, const Vector& beta_hat) {
  require(p.truth.has_value(), "prediction_error: truth missing");
  return (p.X * (beta_hat - p.truth->beta)).squaredNorm() / static_cast<double>(p.n());
}

double parameter_error(const RegressionProblem& p, const Vector& beta_hat) {
  require(p.truth.has_value(), "parameter_error: truth missing");
  return (beta_hat - p.truth->beta).squaredNorm();
}

double frobenius_error(const PcaProblem& p, const Matrix& L_hat) {
  require(p.truth.has_value(), "frobenius_error: truth missing");
  return (L_hat - p.truth->L).norm();
}

}  // namespace rh
