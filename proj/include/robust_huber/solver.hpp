#pragma once

#include "robust_huber/common.hpp"
#include "robust_huber/prox.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace rh {

struct SolverConfig {
  int max_iters = 50000;
  double rel_tol = 1e-7;
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  double objective_reference_margin = 1e-9;
  bool record_history = false;

  void validate() const;
};

// min_x smooth(x) + regularizer(x) subject to an optional entrywise box.
// Vectors are represented as d x 1 matrices.
struct CompositeProblem {
  // Returns the smooth loss; writes the gradient when grad is non-null.
  std::function<double(const Matrix& x, Matrix* grad)> smooth_eval;
  // Prox of step * regularizer.
  std::function<Matrix(const Matrix& x, double step)> prox;
  std::function<double(const Matrix& x)> regularizer;
  std::optional<MaxNormBall> constraint;
  Index rows = 0;
  Index cols = 1;
  // Lipschitz constant of the smooth gradient when known; 0 means unknown.
  double lipschitz = 0.0;
};

struct SolveResult {
  Matrix point;
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool reference_dominated = false;
  std::vector<double> history;  // objective per accepted iterate, if requested
};

double composite_objective(const CompositeProblem& problem, const Matrix& x);
bool is_feasible(const CompositeProblem& problem, const Matrix& x);

SolveResult solve_fista(const CompositeProblem& problem, const SolverConfig& config, const Matrix& start);
SolveResult solve_split(const CompositeProblem& problem, const SolverConfig& config, const Matrix& start);

bool certify_against_reference(const CompositeProblem& problem, const Matrix& candidate, const Matrix& reference,
                               double margin = 0.0);

}  // namespace rh
