#include "robust_huber/lowerbound.hpp"

#include "robust_huber/datagen.hpp"
#include "robust_huber/parallel.hpp"

#include <cmath>

namespace rh {

void LowerBoundSpec::validate() const {
  require(r >= 1 && n >= r, "lower bound: need n >= r >= 1");
  require(xi > 0.0 && xi * std::sqrt(static_cast<double>(r)) < 2.0 * std::sqrt(static_cast<double>(n)),
          "lower bound: need xi > 0 and xi sqrt(r) < 2 sqrt(n)");
  require(epsilon > 0.0 && epsilon < 1.0, "lower bound: epsilon must lie in (0,1)");
  require(trials >= 1, "lower bound: trials must be positive");
}

double lb_alpha_of_xi(Index n, Index r, double xi) {
  return lb_noise_law(n, r, xi).a;
}

double lb_xi_of_alpha(Index n, Index r, double alpha) {
  require(n >= r && r >= 1, "lower bound: need n >= r >= 1");
  require(alpha > 0.0 && alpha <= 1.0, "lower bound: alpha must lie in (0,1]");
  // alpha = t / (2 - t) with t = xi sqrt(r/n)  =>  t = 2 alpha / (1 + alpha).
  double t = 2.0 * alpha / (1.0 + alpha);
  return t * std::sqrt(static_cast<double>(n) / static_cast<double>(r));
}

ResultRow run_lb_trial(const LowerBoundSpec& spec, double alpha, int trial, Seed seed, const EstimatorConstants& c,
                       const SolverConfig& cfg) {
  ResultRow row;
  row.scenario = "lowerbound_phase";
  row.trial = trial;
  double xi = lb_xi_of_alpha(spec.n, spec.r, alpha);
  row.metrics["xi"] = xi;
  row.flags["in_proof_range"] = xi <= 0.5;
  // L* depends only on the trial so every alpha sees the same signals.
  Matrix L = gen_flat_lowrank(spec.n, spec.r, 1.0, derive(seed, static_cast<std::uint64_t>(trial), 0));
  Matrix N = gen_lb_noise(spec.n, spec.r, xi, derive(seed, static_cast<std::uint64_t>(trial), 1));
  PcaProblem p;
  p.Y = L + N;
  p.rho_over_n = 1.0;
  p.zeta = 1.0;
  p.truth = LowRankTruth{L, spec.r};
  PcaFit fit = estimate_pca(p, c, cfg);
  double rel = frobenius_error(p, fit.L) / static_cast<double>(spec.n);
  row.metrics["relative_error"] = rel;
  row.metrics["gamma"] = fit.gamma;
  row.metrics["objective"] = fit.solve.objective;
  row.metrics["residual"] = fit.solve.residual;
  row.iterations = fit.solve.iterations;
  row.flags["success"] = rel <= spec.epsilon;
  row.flags["certified"] = fit.certified.value_or(false);
  row.flags["converged"] = fit.solve.converged;
  return row;
}

PhaseTable run_phase_experiment(const LowerBoundSpec& spec, const std::vector<double>& alphas, Seed seed,
                                const EstimatorConstants& c, const SolverConfig& cfg, int threads) {
  require(spec.r >= 1 && spec.n >= spec.r, "lower bound: need n >= r >= 1");
  require(spec.epsilon > 0.0 && spec.epsilon < 1.0, "lower bound: epsilon must lie in (0,1)");
  require(spec.trials >= 1, "lower bound: trials must be positive");
  require(!alphas.empty(), "lower bound: empty alpha list");
  for (double a : alphas) {
    // Unrealizable values fail here, before any work is done.
    if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("lower bound: alpha not realizable by the noise law");
    lb_xi_of_alpha(spec.n, spec.r, a);
  }
  PhaseTable table;
  const std::size_t jobs = alphas.size() * static_cast<std::size_t>(spec.trials);
  table.rows.resize(jobs);
  parallel_for(jobs, threads, [&](std::size_t j) {
    std::size_t ai = j / static_cast<std::size_t>(spec.trials);
    int t = static_cast<int>(j % static_cast<std::size_t>(spec.trials));
    ResultRow row;
    try {
      row = run_lb_trial(spec, alphas[ai], t, seed, c, cfg);
    } catch (const std::exception& e) {
      row.scenario = "lowerbound_phase";
      row.trial = t;
      row.error = e.what();
    }
    row.point["alpha"] = alphas[ai];
    table.rows[j] = std::move(row);
  });
  for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
    PhaseRow s;
    s.alpha = alphas[ai];
    s.xi = lb_xi_of_alpha(spec.n, spec.r, alphas[ai]);
    s.in_proof_range = s.xi <= 0.5;
    int ok = 0, done = 0;
    double sum = 0.0;
    for (int t = 0; t < spec.trials; ++t) {
      const auto& row = table.rows[ai * static_cast<std::size_t>(spec.trials) + static_cast<std::size_t>(t)];
      if (!row.error.empty()) continue;
      ++done;
      sum += row.metrics.at("relative_error");
      ok += row.flags.at("success") ? 1 : 0;
    }
    s.trials = done;
    s.mean_relative_error = done ? sum / done : std::nan("");
    s.success_fraction = done ? static_cast<double>(ok) / done : 0.0;
    table.summary.push_back(s);
  }
  return table;
}

}  // namespace rh
