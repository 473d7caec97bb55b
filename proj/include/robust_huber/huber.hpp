#pragma once

#include "robust_huber/common.hpp"

#include <cmath>

namespace rh {

struct HuberParams {
  double h = 2.0;
  explicit HuberParams(double h_ = 2.0) : h(h_) {
    require(h_ > 0.0 && std::isfinite(h_), "huber: h must be positive and finite");
  }
};

// Residuals are any dense Eigen block; vectors are n x 1 matrices.
using ResidualsRef = Eigen::Ref<const Matrix>;

double huber_penalty(double t, const HuberParams& p);
double huber_penalty_deriv(double t, const HuberParams& p);

// Sum of penalties with compensated accumulation.
double huber_loss(const ResidualsRef& r, const HuberParams& p);
Matrix huber_loss_grad(const ResidualsRef& r, const HuberParams& p);

// Bregman divergence of the penalty: f(eta+delta) - f(eta) - f'(eta) delta.
double huber_bregman(double eta, double delta, const HuberParams& p);

// Second-order lower bound; always true, kept as a predicate for tests.
bool curvature_lower_bound_holds(double eta, double delta, double tau, const HuberParams& p);

// Neumaier summation helper, shared by the objective evaluators.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace rh
