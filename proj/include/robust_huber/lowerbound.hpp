#pragma once

#include "robust_huber/common.hpp"
#include "robust_huber/estimators.hpp"
#include "robust_huber/results.hpp"

#include <vector>

namespace rh {

struct LowerBoundSpec {
  Index n = 400;
  Index r = 1;
  double xi = 0.5;
  double epsilon = 0.5;
  int trials = 10;
  void validate() const;
};

double lb_alpha_of_xi(Index n, Index r, double xi);
// Inverse map; throws PreconditionError when no admissible xi gives alpha.
double lb_xi_of_alpha(Index n, Index r, double alpha);

struct PhaseRow {
  double alpha = 0.0;
  double xi = 0.0;
  double mean_relative_error = 0.0;
  double success_fraction = 0.0;
  int trials = 0;
  bool in_proof_range = false;  // xi <= 1/2
};

struct PhaseTable {
  std::vector<PhaseRow> summary;
  std::vector<ResultRow> rows;
};

// One trial: flat L* at unit scale, lower-bound noise, PCA estimate, relative error ||L_hat - L*||_F / n.
ResultRow run_lb_trial(const LowerBoundSpec& spec, double alpha, int trial, Seed seed, const EstimatorConstants& c,
                       const SolverConfig& cfg);

PhaseTable run_phase_experiment(const LowerBoundSpec& spec, const std::vector<double>& alphas, Seed seed,
                                const EstimatorConstants& c = {}, const SolverConfig& cfg = {}, int threads = 1);

}  // namespace rh
