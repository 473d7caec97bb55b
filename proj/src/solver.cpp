#include "robust_huber/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rh {

void SolverConfig::validate() const {
  require(max_iters >= 1, "solver: max_iters must be >= 1");
  require(rel_tol > 0.0, "solver: rel_tol must be positive");
  require(initial_step > 0.0, "solver: initial_step must be positive");
  require(backtrack_factor > 0.0 && backtrack_factor < 1.0, "solver: backtrack_factor must lie in (0,1)");
  require(objective_reference_margin >= 0.0, "solver: margin must be non-negative");
}

namespace {

void check_shape(const CompositeProblem& p, const Matrix& x) {
  require(x.rows() == p.rows && x.cols() == p.cols, "solver: start point has the wrong shape");
  require(static_cast<bool>(p.smooth_eval) && static_cast<bool>(p.prox) && static_cast<bool>(p.regularizer),
          "solver: incomplete problem definition");
}

double checked(double v, const char* what, int iter) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "solver diverged: non-finite " << what << " at iteration " << iter;
    throw DivergedError(os.str());
  }
  return v;
}

// Non-finite iterates surface as DomainError from the loss; report them as divergence.
double eval_loss(const CompositeProblem& p, const Matrix& x, Matrix* grad, int iter) {
  double v;
  try {
    v = p.smooth_eval(x, grad);
  } catch (const DomainError& e) {
    std::ostringstream os;
    os << "solver diverged at iteration " << iter << ": " << e.what();
    throw DivergedError(os.str());
  }
  return checked(v, "loss", iter);
}

double initial_step(const CompositeProblem& p, const SolverConfig& c) {
  return p.lipschitz > 0.0 ? std::min(c.initial_step, 1.0 / p.lipschitz) : c.initial_step;
}

}  // namespace

double composite_objective(const CompositeProblem& problem, const Matrix& x) {
  return problem.smooth_eval(x, nullptr) + problem.regularizer(x);
}

bool is_feasible(const CompositeProblem& problem, const Matrix& x) {
  if (!problem.constraint) return true;
  double r = problem.constraint->radius;
  return x.size() == 0 || x.cwiseAbs().maxCoeff() <= r + 1e-12 * std::max(1.0, r);
}

SolveResult solve_fista(const CompositeProblem& problem, const SolverConfig& config, const Matrix& start) {
  config.validate();
  check_shape(problem, start);
  require(!problem.constraint, "solve_fista: box constraints need solve_split");

  SolveResult out;
  double step = initial_step(problem, config);
  const double beta = config.backtrack_factor;

  Matrix x = start, gx;
  double fx = eval_loss(problem, x, &gx, 0);
  double Fx = checked(fx + problem.regularizer(x), "objective", 0);
  if (config.record_history) out.history.push_back(Fx);

  Matrix y = x, gy = gx;
  double fy = fx;
  double t = 1.0;
  bool y_is_x = true;

  // Backtracked prox-gradient step from `base`; returns the new point and its loss/gradient.
  auto prox_step = [&](const Matrix& base, double fbase, const Matrix& gbase, Matrix& z, double& fz, Matrix& gz,
                       int iter) {
    for (;;) {
      z = problem.prox(base - step * gbase, step);
      fz = eval_loss(problem, z, &gz, iter);
      Matrix d = z - base;
      double model = fbase + (gbase.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
      if (fz <= model + 1e-12 * (1.0 + std::abs(fbase))) return;
      step *= beta;
      if (step < 1e-300) throw DivergedError("solver diverged: step size underflow in backtracking");
    }
  };

  int k = 0;
  for (; k < config.max_iters; ++k) {
    Matrix px = problem.prox(x - step * gx, step);
    out.residual = (x - px).norm() / std::max(1.0, x.norm());
    if (out.residual <= config.rel_tol) {
      out.converged = true;
      break;
    }
    if (!y_is_x) fy = eval_loss(problem, y, &gy, k);

    Matrix z, gz;
    double fz;
    prox_step(y, fy, gy, z, fz, gz, k);
    double Fz = checked(fz + problem.regularizer(z), "objective", k);

    if (Fz > Fx) {
      // Restart: drop momentum and take a plain step from x, which cannot increase F.
      t = 1.0;
      prox_step(x, fx, gx, z, fz, gz, k);
      Fz = checked(fz + problem.regularizer(z), "objective", k);
      if (Fz > Fx) {
        // Rounding-level stall; x is as good as we can certify.
        break;
      }
    }
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    y_is_x = false;
    x = std::move(z);
    gx = std::move(gz);
    fx = fz;
    Fx = Fz;
    t = t_next;
    if (config.record_history) out.history.push_back(Fx);
  }
  if (k == config.max_iters) {
    Matrix px = problem.prox(x - step * gx, step);
    out.residual = (x - px).norm() / std::max(1.0, x.norm());
    out.converged = out.residual <= config.rel_tol;
  }
  out.iterations = k;
  out.point = std::move(x);
  out.objective = Fx;
  return out;
}

SolveResult solve_split(const CompositeProblem& problem, const SolverConfig& config, const Matrix& start) {
  config.validate();
  check_shape(problem, start);
  require(problem.constraint.has_value(), "solve_split: problem needs a box constraint");
  const double radius = problem.constraint->radius;
  const double step = initial_step(problem, config);

  SolveResult out;
  Matrix z = start;
  Matrix xb, grad;
  int k = 0;
  for (; k < config.max_iters; ++k) {
    xb = project_maxnorm(z, radius);
    double f = eval_loss(problem, xb, &grad, k);
    Matrix xr = problem.prox(2.0 * xb - z - step * grad, step);
    Matrix diff = xr - xb;
    z += diff;
    out.residual = diff.norm() / std::max(1.0, xb.norm());
    if (!std::isfinite(out.residual)) throw DivergedError("solver diverged: non-finite splitting residual");
    if (config.record_history) out.history.push_back(f + problem.regularizer(xb));
    if (out.residual <= config.rel_tol) {
      out.converged = true;
      ++k;
      break;
    }
  }
  // Final projection keeps the output exactly feasible.
  out.point = project_maxnorm(z, radius);
  out.iterations = k;
  out.objective = checked(composite_objective(problem, out.point), "objective", k);
  return out;
}

bool certify_against_reference(const CompositeProblem& problem, const Matrix& candidate, const Matrix& reference,
                               double margin) {
  require(margin >= 0.0, "certify: margin must be non-negative");
  require(is_feasible(problem, candidate), "certify: candidate is infeasible");
  require(is_feasible(problem, reference), "certify: reference is infeasible");
  return composite_objective(problem, candidate) <= composite_objective(problem, reference) + margin;
}

}  // namespace rh
