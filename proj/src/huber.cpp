#include "robust_huber/huber.hpp"

#include <cmath>

namespace rh {

namespace {
void check_finite(double t) {
  if (!std::isfinite(t)) throw DomainError("huber: non-finite residual");
}
}  // namespace

double huber_penalty(double t, const HuberParams& p) {
  check_finite(t);
  double a = std::abs(t);
  if (a <= p.h) return 0.5 * t * t;
  return p.h * (a - 0.5 * p.h);
}

double huber_penalty_deriv(double t, const HuberParams& p) {
  check_finite(t);
  if (std::abs(t) <= p.h) return t;
  return t > 0 ? p.h : -p.h;
}

double huber_loss(const ResidualsRef& r, const HuberParams& p) {
  CompensatedSum acc;
  for (Index j = 0; j < r.cols(); ++j)
    for (Index i = 0; i < r.rows(); ++i) acc.add(huber_penalty(r(i, j), p));
  return acc.value();
}

Matrix huber_loss_grad(const ResidualsRef& r, const HuberParams& p) {
  Matrix g(r.rows(), r.cols());
  for (Index j = 0; j < r.cols(); ++j)
    for (Index i = 0; i < r.rows(); ++i) g(i, j) = huber_penalty_deriv(r(i, j), p);
  return g;
}

double huber_bregman(double eta, double delta, const HuberParams& p) {
  return huber_penalty(eta + delta, p) - huber_penalty(eta, p) - huber_penalty_deriv(eta, p) * delta;
}

bool curvature_lower_bound_holds(double eta, double delta, double tau, const HuberParams& p) {
  require(tau >= 0.0 && tau <= p.h, "curvature bound: tau outside [0, h]");
  double lhs = huber_bregman(eta, delta, p);
  bool active = std::abs(eta) <= p.h - tau && std::abs(delta) <= tau;
  double rhs = active ? 0.5 * delta * delta : 0.0;
  // Cancellation in the three-term difference is bounded by a few ulps of the largest term.
  double slack = 1e-12 * (1.0 + huber_penalty(eta + delta, p) + huber_penalty(eta, p));
  return lhs >= rhs - slack;
}

}  // namespace rh
