#pragma once

#include "robust_huber/common.hpp"

namespace rh {

struct RegWeight {
  double gamma = 0.0;
  explicit RegWeight(double g = 0.0) : gamma(g) {
    require(g >= 0.0 && std::isfinite(g), "regularization weight must be non-negative");
  }
};

struct MaxNormBall {
  double radius = 1.0;
  explicit MaxNormBall(double r = 1.0) : radius(r) {
    require(r > 0.0 && std::isfinite(r), "max-norm radius must be positive");
  }
};

// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTol = 1e-12;
// Thresholds below sqrt of this fraction of the top singular value go through a full SVD.
inline constexpr double kGramThresholdFloor = 1e-4;

Vector prox_l1(const Vector& v, double t);

struct SvtResult {
  Matrix point;
  double nuclear_norm = 0.0;  // of the thresholded matrix
  Index rank = 0;
};
SvtResult singular_value_threshold(const Matrix& m, double t);
Matrix prox_nuclear(const Matrix& m, double t);

Matrix project_maxnorm(const Matrix& m, double radius);

double dual_norm_linf(const Vector& v);
double dual_norm_spectral(const Matrix& m);

double nuclear_norm(const Matrix& m);
Vector singular_values(const Matrix& m);
Index numeric_rank(const Matrix& m);

// Largest singular value by power iteration on A^T A; used for step sizes.
double spectral_norm_power(const Matrix& a, int max_iters = 500, double tol = 1e-10);

}  // namespace rh
