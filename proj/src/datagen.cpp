#include "robust_huber/datagen.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace rh {

std::string to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::symmetric_mixture: return "symmetric_mixture";
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::deterministic_sparse_outliers: return "deterministic_sparse_outliers";
    case NoiseFamily::lb_geometric_even: return "lb_geometric_even";
  }
  return "unknown";
}

NoiseFamily noise_family_from_string(const std::string& s) {
  for (auto f : {NoiseFamily::symmetric_mixture, NoiseFamily::gaussian, NoiseFamily::deterministic_sparse_outliers,
                 NoiseFamily::lb_geometric_even})
    if (to_string(f) == s) return f;
  throw ConfigError("unknown noise family '" + s + "'");
}

Matrix gen_gaussian_design(Index n, Index d, const Matrix& sigma, Seed seed) {
  require(n >= 1 && d >= 1, "gaussian design: empty shape");
  require(sigma.rows() == d && sigma.cols() == d, "gaussian design: Sigma has the wrong shape");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericError("gaussian design: Sigma is not positive definite");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> z;
  Matrix g(n, d);
  // Row-major fill so a row's draws are contiguous in the stream.
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = z(rng);
  Matrix lower = llt.matrixL();
  return g * lower.transpose();
}

std::pair<Vector, std::vector<Index>> gen_sparse_signal(Index d, Index k, double magnitude, Seed seed) {
  require(k >= 1 && k <= d, "sparse signal: need 1 <= k <= d");
  Rng rng = make_rng(seed);
  std::vector<Index> idx(d);
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates; std::shuffle's draw pattern is implementation-defined.
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, d - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<Index> support(idx.begin(), idx.begin() + k);
  std::sort(support.begin(), support.end());
  Vector beta = Vector::Zero(d);
  std::bernoulli_distribution coin(0.5);
  for (Index j : support) beta[j] = coin(rng) ? magnitude : -magnitude;
  return {beta, support};
}

double gaussian_sigma_for(double alpha, double zeta) {
  require(alpha > 0.0 && alpha <= 1.0, "gaussian noise: alpha must lie in (0,1]");
  if (alpha == 1.0 || zeta == 0.0) return 0.0;
  boost::math::normal_distribution<double> std_normal;
  return zeta / boost::math::quantile(std_normal, 0.5 * (1.0 + alpha));
}

double oblivious_inlier_mass(const NoiseSpec& spec) {
  require(spec.alpha > 0.0 && spec.alpha <= 1.0, "noise: alpha must lie in (0,1]");
  switch (spec.family) {
    case NoiseFamily::symmetric_mixture:
      require(spec.outlier_scale > 0.0, "noise: outlier_scale must be positive");
      // Outliers are scale * |Cauchy|, which lands in [-zeta, zeta] with probability (2/pi) atan(zeta / scale).
      return spec.alpha + (1.0 - spec.alpha) * 2.0 / std::numbers::pi * std::atan(spec.zeta / spec.outlier_scale);
    case NoiseFamily::gaussian:
      return spec.alpha;
    default:
      throw PreconditionError("inlier mass: family must be symmetric_mixture or gaussian");
  }
}

namespace {

void fill_oblivious(double* out, Index count, const NoiseSpec& spec, Seed seed) {
  require(spec.alpha > 0.0 && spec.alpha <= 1.0, "noise: alpha must lie in (0,1]");
  require(spec.zeta >= 0.0, "noise: zeta must be non-negative");
  Rng rng = make_rng(seed);
  switch (spec.family) {
    case NoiseFamily::symmetric_mixture: {
      require(spec.outlier_scale > 0.0, "noise: outlier_scale must be positive");
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::cauchy_distribution<double> cauchy(0.0, 1.0);
      for (Index i = 0; i < count; ++i) {
        // Fixed number of draws per entry keeps streams aligned across alpha values.
        double u = unit(rng), v = unit(rng), c = cauchy(rng), s = unit(rng);
        if (u < spec.alpha)
          out[i] = spec.zeta * (2.0 * v - 1.0);
        else
          out[i] = (s < 0.5 ? -1.0 : 1.0) * spec.outlier_scale * std::abs(c);
      }
      break;
    }
    case NoiseFamily::gaussian: {
      double sigma = gaussian_sigma_for(spec.alpha, spec.zeta);
      std::normal_distribution<double> z;
      for (Index i = 0; i < count; ++i) out[i] = sigma * z(rng);
      break;
    }
    default:
      throw PreconditionError("oblivious noise: family must be symmetric_mixture or gaussian");
  }
}

}  // namespace

Vector gen_oblivious_noise_vector(Index n, const NoiseSpec& spec, Seed seed) {
  Vector v(n);
  fill_oblivious(v.data(), n, spec, seed);
  return v;
}

Matrix gen_oblivious_noise_matrix(Index rows, Index cols, const NoiseSpec& spec, Seed seed) {
  Matrix m(rows, cols);
  fill_oblivious(m.data(), m.size(), spec, seed);
  return m;
}

Vector gen_deterministic_outlier_noise(Index n, double alpha, Seed seed) {
  require(alpha > 0.0 && alpha <= 1.0, "outlier noise: alpha must lie in (0,1]");
  Index good = static_cast<Index>(std::floor(alpha * static_cast<double>(n)));
  require(good >= 1, "outlier noise: floor(alpha n) must be at least 1");
  Rng rng = make_rng(seed);
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < good; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Vector eta(n);
  // Alternating signs for the large entries: fixed, not random.
  for (Index i = 0; i < n; ++i) eta[i] = (i % 2 == 0) ? 1e6 : -1e6;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Index i = 0; i < good; ++i) eta[idx[i]] = u(rng);
  return eta;
}

Matrix gen_flat_lowrank(Index n, Index r, double rho_over_n, Seed seed) {
  require(r >= 1 && r <= n, "flat low-rank: need 1 <= r <= n");
  require(rho_over_n > 0.0, "flat low-rank: rho/n must be positive");
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  Matrix L(n, n);
  Index base = n / r, extra = n % r, row = 0;
  for (Index k = 0; k < r; ++k) {
    Index size = base + (k < extra ? 1 : 0);
    Vector u(size);
    for (Index i = 0; i < size; ++i) u[i] = coin(rng) ? 1.0 : -1.0;
    Vector v(n);
    for (Index j = 0; j < n; ++j) v[j] = coin(rng) ? 1.0 : -1.0;
    L.middleRows(row, size) = rho_over_n * u * v.transpose();
    row += size;
  }
  return L;
}

double LbNoiseLaw::probability(long long l) const {
  if (l % 2 != 0) return 0.0;
  return a * std::pow(q, static_cast<double>(std::llabs(l) / 2));
}

LbNoiseLaw lb_noise_law(Index n, Index r, double xi) {
  require(n >= 1 && r >= 1 && r <= n, "lb noise: need 1 <= r <= n");
  double t = xi * std::sqrt(static_cast<double>(r) / static_cast<double>(n));
  // The law is a probability distribution exactly when 0 < t <= 1 (q in [0,1)).
  require(xi > 0.0 && t <= 1.0, "lb noise: need 0 < xi and xi*sqrt(r/n) <= 1");
  LbNoiseLaw law;
  law.a = t / (2.0 - t);
  law.q = 1.0 - t;
  return law;
}

Matrix gen_lb_noise(Index n, Index r, double xi, Seed seed) {
  LbNoiseLaw law = lb_noise_law(n, r, xi);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix N(n, n);
  double p = 1.0 - law.q;
  for (Index i = 0; i < N.size(); ++i) {
    double u = unit(rng), g = unit(rng), s = unit(rng);
    if (u < law.a || p >= 1.0) {
      N.data()[i] = 0.0;
      continue;
    }
    // Magnitude 2j with P(j) = p q^(j-1), by inversion.
    double j = std::max(1.0, std::ceil(std::log1p(-g) / std::log(law.q)));
    N.data()[i] = (s < 0.5 ? -2.0 : 2.0) * j;
  }
  return N;
}

PcaProblem gen_matrix_completion_scenario(Index n, Index r, double alpha, double zeta, double rho_over_n,
                                          Seed seed) {
  require(alpha > 0.0 && alpha <= 1.0, "matrix completion: alpha must lie in (0,1]");
  require(zeta >= 0.0, "matrix completion: zeta must be non-negative");
  PcaProblem p;
  p.rho_over_n = rho_over_n;
  p.zeta = zeta;
  Matrix L = gen_flat_lowrank(n, r, rho_over_n, derive(seed, 1));
  Rng rng = make_rng(derive(seed, 2));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double hidden = 1e3 * rho_over_n;
  Matrix N(n, n);
  for (Index i = 0; i < N.size(); ++i) {
    double u = unit(rng), v = unit(rng);
    if (u < alpha)
      N.data()[i] = zeta * (2.0 * v - 1.0);
    else
      N.data()[i] = v < 0.5 ? -hidden : hidden;
  }
  p.Y = L + N;
  p.truth = LowRankTruth{L, r};
  return p;
}

Matrix toeplitz_covariance(Index d, double corr) {
  require(std::abs(corr) < 1.0, "toeplitz covariance: |corr| must be below 1");
  Matrix s(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) s(i, j) = std::pow(corr, static_cast<double>(std::abs(i - j)));
  return s;
}

}  // namespace rh
