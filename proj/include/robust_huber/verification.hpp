#pragma once

#include "robust_huber/common.hpp"
#include "robust_huber/estimators.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rh {

enum class RegKind { l1, nuclear };

// A direction plus its regularizer norms, computed in factored form where possible.
struct ConeSample {
  Matrix u;
  double reg_norm = 0.0;
  double model_reg_norm = 0.0;
};

// Samples directions from the cone { u : ||u|| <= b ||P u|| }, P projecting onto the enlarged model subspace.
class ConeSampler {
 public:
  enum class Structure { sparse_support, lowrank_spaces };

  static ConeSampler sparse(Index d, std::vector<Index> support, double expansion = 4.0);
  // Column span U and row span V taken from the top-r singular vectors of L*.
  static ConeSampler lowrank(const Matrix& lstar, Index r, double expansion = 4.0);

  Structure structure() const { return structure_; }
  RegKind reg_kind() const { return structure_ == Structure::sparse_support ? RegKind::l1 : RegKind::nuclear; }
  double expansion() const { return expansion_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const std::vector<Index>& support() const { return support_; }
  const Matrix& col_span() const { return U_; }
  const Matrix& row_span() const { return V_; }

  // Trial t draws from its own stream, so sample sets for T trials prefix those for T' > T.
  ConeSample sample(Seed seed, Index trial) const;
  // Pure-structure and boundary directions that random draws rarely hit.
  std::vector<ConeSample> structured() const;

  Matrix project_model(const Matrix& u) const;
  double reg_norm(const Matrix& u) const;
  // Cone membership up to a relative tolerance.
  bool contains(const Matrix& u, double rel_tol = 1e-9) const;
  double cone_ratio(const Matrix& u) const;  // ||u|| / ||P u||

 private:
  Structure structure_ = Structure::sparse_support;
  double expansion_ = 4.0;
  Index rows_ = 0, cols_ = 1;
  std::vector<Index> support_, off_support_;
  Matrix U_, V_, Uperp_proj_, Vperp_proj_;
};

double reg_norm(RegKind kind, const Matrix& u);

// Additivity of a norm across a model subspace and the orthogonal complement of its enlargement.
bool check_decomposability(const std::function<double(const Matrix&)>& reg_norm,
                           const std::vector<Matrix>& model_basis,
                           const std::vector<Matrix>& complement_basis, int trials, Seed seed);
using SubspaceDraw = std::function<Matrix(Rng&)>;
bool check_decomposability(const std::function<double(const Matrix&)>& reg_norm, const SubspaceDraw& draw_model,
                           const SubspaceDraw& draw_complement, int trials, Seed seed);

std::pair<std::vector<Matrix>, std::vector<Matrix>> l1_decomposition_bases(Index d, const std::vector<Index>& support);
std::pair<std::vector<Matrix>, std::vector<Matrix>> nuclear_decomposition_bases(const Matrix& U, const Matrix& V);

using ErrorMetric = std::function<double(const Matrix&)>;
ErrorMetric regression_error_metric(const Matrix& X);  // (1/sqrt n) ||X u||
ErrorMetric frobenius_metric();

// Max over sampled (and structured) cone directions of ||u||_reg / E(u).
double measure_contraction(const ConeSampler& cone, const ErrorMetric& metric, int trials, Seed seed);

double measure_gradient_dual_norm(const RegressionProblem& p, const Vector& truth);
double measure_gradient_dual_norm(const PcaProblem& p, const Matrix& truth, double h);

double regression_gradient_bound(Index n, Index d, double nu, double delta);  // high-probability bound on the gradient sup-norm
double pca_gradient_bound(Index n, double h, double delta);                   // high-probability bound on the gradient spectral norm

struct RscEstimate {
  double kappa = 0.0;   // min over samples of bracket / (E^2 / 2)
  double min_bracket = 0.0;
  int samples = 0;
  int attempts = 0;
};

RscEstimate estimate_rsc(const RegressionProblem& p, const Vector& truth, const ConeSampler& cone, double R,
                         int trials, Seed seed);
RscEstimate estimate_rsc(const PcaProblem& p, const Matrix& truth, double h, const ConeSampler& cone, double R,
                         int trials, Seed seed);

// Monte-Carlo upper estimate of the RE constant over { ||u_S||_1 >= 0.1 ||u||_1 }.
double check_re_property(const Matrix& X, const std::vector<Index>& support, int trials, Seed seed);
// Exact value for d <= 12 by enumerating the faces of the cone.
double re_constant_exact(const Matrix& X, const std::vector<Index>& support);

bool check_well_spread(const Matrix& X, const std::vector<Index>& support, Index m, int trials, Seed seed);

// Sandwich 1/2 ||Sigma^1/2 u|| <= ||X u||/sqrt n <= 2 ||Sigma^1/2 u|| on { ||u||_1 <= sqrt(K) ||u|| }.
struct ConcentrationReport {
  bool holds = true;
  int violations = 0;
  int samples = 0;
  double min_ratio = 0.0, max_ratio = 0.0;
};
ConcentrationReport gaussian_concentration(const Matrix& X, const Matrix& sigma, double K, int trials, Seed seed);
bool check_gaussian_concentration(const Matrix& X, const Matrix& sigma, double K, int trials, Seed seed);

struct CertificateOptions {
  int trials = 1000;
  int decomposability_trials = 100;
  int re_trials = 1000;
  Seed seed{0};
  double delta = 0.05;
  double expansion = 4.0;
  // Fraction of sampled directions that must remain feasible at the certified radius.
  double min_active_fraction = 0.1;
  double alpha = 1.0;  // inlier fraction, used by the nominal-constant comparison
};

struct MetaCertificate {
  std::string kind;  // "regression" or "pca"
  double gamma = 0.0;               // regularization weight of the estimator
  double gradient_dual_norm = 0.0;  // ||grad F(truth)||_*
  double gamma_measured = 0.0;      // 2 * gradient_dual_norm
  double s = 0.0;                   // closed-form contraction constant
  double s_measured = 0.0;
  double lambda_hat = 0.0;          // regression only
  double kappa = 0.0;
  double R = 0.0;
  int rsc_active_samples = 0;
  double kappa_at_nominal_radius = 0.0;
  double kappa_nominal = 0.0;
  double nominal_radius = 0.0;

  bool decomposability = false;
  bool contraction = false;
  bool gradient_bound = false;
  bool rsc = false;
  bool radius = false;
  bool radius_formula_ok = false;
  bool nominal_radius_premise = false;

  bool certified = false;  // estimate objective <= truth objective
  double cone_ratio = 0.0;
  bool cone_membership = false;
  double error = 0.0;
  bool error_within_radius = false;

  bool conditions_hold() const { return decomposability && contraction && gradient_bound && rsc && radius; }
  // Conditions and objective dominance hold, yet the error exceeds R.
  bool contradiction() const { return conditions_hold() && certified && !error_within_radius; }
  std::string to_report() const;
};

// Sets R = 4 gamma s / kappa, guarding kappa <= 0 and non-finite inputs.
void finalize_radius(MetaCertificate& c);

MetaCertificate assemble_certificate(const RegressionProblem& p, const RegressionFit& fit,
                                     const CertificateOptions& opts);
MetaCertificate assemble_certificate(const PcaProblem& p, const PcaFit& fit, const CertificateOptions& opts);

}  // namespace rh
