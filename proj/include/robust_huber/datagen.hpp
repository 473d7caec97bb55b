#pragma once

#include "robust_huber/common.hpp"
#include "robust_huber/estimators.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rh {

enum class NoiseFamily { symmetric_mixture, gaussian, deterministic_sparse_outliers, lb_geometric_even };

std::string to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(const std::string& s);

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::symmetric_mixture;
  double alpha = 1.0;
  double zeta = 1.0;
  double outlier_scale = 100.0;
  double xi = 0.5;  // lb family only
};

enum class SignalKind { k_sparse_vector, rank_r_flat_matrix, lb_block_matrix };

struct SignalSpec {
  SignalKind kind = SignalKind::k_sparse_vector;
  Index k_or_r = 1;
  double magnitude = 1.0;
  double rho_over_n = 1.0;
};

Matrix gen_gaussian_design(Index n, Index d, const Matrix& sigma, Seed seed);
std::pair<Vector, std::vector<Index>> gen_sparse_signal(Index d, Index k, double magnitude, Seed seed);
Vector gen_oblivious_noise_vector(Index n, const NoiseSpec& spec, Seed seed);
Matrix gen_oblivious_noise_matrix(Index rows, Index cols, const NoiseSpec& spec, Seed seed);
Vector gen_deterministic_outlier_noise(Index n, double alpha, Seed seed);
Matrix gen_flat_lowrank(Index n, Index r, double rho_over_n, Seed seed);
Matrix gen_lb_noise(Index n, Index r, double xi, Seed seed);
PcaProblem gen_matrix_completion_scenario(Index n, Index r, double alpha, double zeta, double rho_over_n, Seed seed);

// Closed-form pieces of the lower-bound noise law.
struct LbNoiseLaw {
  double a = 0.0;  // P[N = 0]
  double q = 0.0;  // ratio between consecutive even magnitudes
  double probability(long long l) const;  // P[N = l]
};
LbNoiseLaw lb_noise_law(Index n, Index r, double xi);

// P[|N| <= zeta] for the random oblivious families; at least alpha by construction.
double oblivious_inlier_mass(const NoiseSpec& spec);

// Gaussian noise scale that puts mass alpha inside [-zeta, zeta].
double gaussian_sigma_for(double alpha, double zeta);

// Toeplitz covariance Sigma_ij = corr^|i-j|.
Matrix toeplitz_covariance(Index d, double corr);

}  // namespace rh
