#include "robust_huber/datagen.hpp"
#include "robust_huber/estimators.hpp"
#include "robust_huber/prox.hpp"
#include "robust_huber/verification.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rh;

namespace {

double l1(const Matrix& u) { return u.cwiseAbs().sum(); }

Matrix unit(Index d, Index j) {
  Matrix e = Matrix::Zero(d, 1);
  e(j, 0) = 1.0;
  return e;
}

RegressionProblem regression_instance(Index n, Index d, Index k, double alpha, Seed seed) {
  RegressionProblem p;
  p.X = gen_gaussian_design(n, d, Matrix::Identity(d, d), derive(seed, 1));
  auto [beta, support] = gen_sparse_signal(d, k, 1.0, derive(seed, 2));
  NoiseSpec ns;
  ns.alpha = alpha;
  p.y = p.X * beta + gen_oblivious_noise_vector(n, ns, derive(seed, 3));
  p.truth = SparseTruth{beta, support, k};
  p.design = DesignProps{0.25, 1.0, 0};
  return p;
}

}  // namespace

TEST(Decomposability, L1ComplementarySupports) {
  auto bases = l1_decomposition_bases(10, {1, 4, 7});
  EXPECT_TRUE(check_decomposability(l1, bases.first, bases.second, 200, Seed{1}));
}

TEST(Decomposability, NuclearOrthogonalSpans) {
  Rng rng = make_rng(Seed{2});
  std::normal_distribution<double> z;
  Matrix G(8, 8);
  for (Index i = 0; i < G.size(); ++i) G.data()[i] = z(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(8, 8);
  Matrix U = Q.leftCols(2), V = Q.rightCols(2);
  auto bases = nuclear_decomposition_bases(U, V);
  EXPECT_TRUE(check_decomposability([](const Matrix& u) { return nuclear_norm(u); }, bases.first, bases.second, 100,
                                    Seed{3}));
}

TEST(Decomposability, OverlappingSupportsFail) {
  // Both bases contain coordinate 0, so u = e0 and v = -e0 cancel.
  std::vector<Matrix> a{unit(4, 0), unit(4, 1)};
  std::vector<Matrix> b{Matrix(-unit(4, 0)), unit(4, 2)};
  EXPECT_FALSE(check_decomposability(l1, a, b, 100, Seed{4}));
}

TEST(Contraction, SupportRestrictedL1IsSqrtK) {
  const Index d = 30, k = 4;
  std::vector<Index> support{2, 5, 11, 20};
  ConeSampler cone = ConeSampler::sparse(d, support, 1.0);  // b = 1: u lives on the support
  double ratio = measure_contraction(cone, frobenius_metric(), 2000, Seed{5});
  EXPECT_LE(ratio, std::sqrt(static_cast<double>(k)) * (1.0 + 1e-12));
  EXPECT_GT(ratio, 0.9 * std::sqrt(static_cast<double>(k)));
}

TEST(Contraction, RankTwoRNuclearIsSqrtTwoR) {
  Rng rng = make_rng(Seed{6});
  std::normal_distribution<double> z;
  const Index r = 2;
  for (int t = 0; t < 200; ++t) {
    Matrix A(12, 2 * r), B(12, 2 * r);
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = z(rng);
    for (Index i = 0; i < B.size(); ++i) B.data()[i] = z(rng);
    Matrix M = A * B.transpose();
    EXPECT_LE(nuclear_norm(M), std::sqrt(2.0 * r) * M.norm() * (1.0 + 1e-12));
  }
}

TEST(Contraction, PcaConeWithinClosedForm) {
  const Index n = 20, r = 2;
  Matrix L = gen_flat_lowrank(n, r, 1.0, Seed{7});
  ConeSampler cone = ConeSampler::lowrank(L, r);
  double ratio = measure_contraction(cone, frobenius_metric(), 10000, Seed{8});
  EXPECT_LE(ratio, 4.0 * std::sqrt(2.0 * r) + 1e-6);
}

TEST(Cone, SamplesAreMembers) {
  ConeSampler sparse = ConeSampler::sparse(40, {0, 3, 9});
  for (int t = 0; t < 500; ++t) {
    ConeSample s = sparse.sample(Seed{9}, t);
    EXPECT_LE(s.reg_norm, 4.0 * s.model_reg_norm * (1.0 + 1e-9));
    EXPECT_TRUE(sparse.contains(s.u));
  }
  Matrix L = gen_flat_lowrank(15, 2, 1.0, Seed{10});
  ConeSampler lowrank = ConeSampler::lowrank(L, 2);
  for (int t = 0; t < 200; ++t) {
    ConeSample s = lowrank.sample(Seed{11}, t);
    EXPECT_LE(nuclear_norm(s.u), 4.0 * nuclear_norm(lowrank.project_model(s.u)) * (1.0 + 1e-9));
  }
}

TEST(Cone, SampleStreamsArePrefixStable) {
  ConeSampler cone = ConeSampler::sparse(25, {1, 2});
  for (int t = 0; t < 20; ++t) EXPECT_EQ(cone.sample(Seed{12}, t).u, cone.sample(Seed{12}, t).u);
}

TEST(Gradient, ZeroNoiseRegressionGradientVanishes) {
  RegressionProblem p;
  p.X = gen_gaussian_design(50, 10, Matrix::Identity(10, 10), Seed{13});
  Vector beta = Vector::Zero(10);
  beta[3] = 2.0;
  p.y = p.X * beta;
  EXPECT_EQ(measure_gradient_dual_norm(p, beta), 0.0);
}

TEST(Gradient, BoundFormulasRejectBadDelta) {
  EXPECT_THROW(regression_gradient_bound(10, 5, 1.0, 0.0), PreconditionError);
  EXPECT_THROW(pca_gradient_bound(10, 1.0, 1.0), PreconditionError);
  EXPECT_DOUBLE_EQ(pca_gradient_bound(100, 2.0, 0.05), 20.0 * std::sqrt(100.0 + std::log(40.0)));
}

TEST(Gradient, RegressionExceedanceSmall) {
  // Reduced redraw count; the full 200-redraw check lives in the acceptance binary.
  const Index n = 500, d = 50;
  int exceed = 0;
  for (int t = 0; t < 40; ++t) {
    RegressionProblem p = regression_instance(n, d, 3, 0.5, derive(Seed{14}, t));
    double nu = p.X.colwise().squaredNorm().maxCoeff() / static_cast<double>(n);
    if (measure_gradient_dual_norm(p, p.truth->beta) > regression_gradient_bound(n, d, nu, 0.05)) ++exceed;
  }
  EXPECT_EQ(exceed, 0);
}

TEST(Rsc, BracketNonNegative) {
  RegressionProblem p = regression_instance(200, 20, 2, 0.5, Seed{15});
  ConeSampler cone = ConeSampler::sparse(20, p.truth->support);
  for (double R : {1e-3, 0.1, 1.0, 10.0}) {
    RscEstimate est = estimate_rsc(p, p.truth->beta, cone, R, 200, Seed{16});
    EXPECT_GE(est.min_bracket, 0.0);
    EXPECT_GE(est.kappa, 0.0);
  }
}

TEST(Rsc, QuadraticRegimeMatchesHessianForm) {
  // Inlier residuals below 1 and outliers beyond 50: at a small radius only inliers carry curvature.
  const Index n = 300, d = 15;
  RegressionProblem p;
  p.X = gen_gaussian_design(n, d, Matrix::Identity(d, d), Seed{17});
  Vector beta = Vector::Zero(d);
  beta[0] = 1.0;
  Vector noise(n);
  std::vector<bool> inlier(n);
  Rng rng = make_rng(Seed{18});
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    inlier[i] = i % 3 != 0;
    noise[i] = inlier[i] ? unif(rng) : (unif(rng) > 0 ? 60.0 : -60.0);
  }
  p.y = p.X * beta + noise;
  ConeSampler cone = ConeSampler::sparse(d, {0});
  const int trials = 300;
  // Residual moves satisfy |x_i| <= ||x|| = R sqrt(n) < 1, so no entry crosses a Huber kink.
  const double R = 0.05;
  RscEstimate est = estimate_rsc(p, beta, cone, R, trials, Seed{19});

  Matrix Xin(0, d);
  for (Index i = 0; i < n; ++i)
    if (inlier[i]) {
      Xin.conservativeResize(Xin.rows() + 1, Eigen::NoChange);
      Xin.row(Xin.rows() - 1) = p.X.row(i);
    }
  double expected = std::numeric_limits<double>::infinity();
  auto form = [&](const Matrix& u) {
    double full = (p.X * u.col(0)).squaredNorm();
    if (full > 0.0) expected = std::min(expected, static_cast<double>(n) * (Xin * u.col(0)).squaredNorm() / full);
  };
  // Same visiting order as the estimator: structured directions, then samples until trials + 1 in total.
  int visited = 0;
  for (const auto& s : cone.structured()) form(s.u), ++visited;
  for (int t = 0; visited < trials + 1; ++t) form(cone.sample(Seed{19}, t).u), ++visited;
  EXPECT_NEAR(est.kappa, expected, 1e-6 * expected);
}

TEST(Rsc, InRegimeRegressionMeetsNominalConstant) {
  const double alpha = 0.5;
  RegressionProblem p = regression_instance(4000, 20, 2, alpha, Seed{20});
  ConeSampler cone = ConeSampler::sparse(20, p.truth->support);
  RscEstimate est = estimate_rsc(p, p.truth->beta, cone, 0.05, 1000, Seed{21});
  EXPECT_GE(est.kappa, 0.01 * alpha * 4000.0);
}

TEST(RestrictedEigenvalue, ScaledIdentityGivesOne) {
  const Index n = 12;
  Matrix X = std::sqrt(static_cast<double>(n)) * Matrix::Identity(n, n);
  EXPECT_NEAR(check_re_property(X, {0, 5}, 500, Seed{22}), 1.0, 1e-12);
  EXPECT_NEAR(re_constant_exact(X, {0, 5}), 1.0, 1e-12);
}

TEST(RestrictedEigenvalue, ZeroSupportColumnDetected) {
  Matrix X = gen_gaussian_design(100, 10, Matrix::Identity(10, 10), Seed{23});
  X.col(3).setZero();
  EXPECT_LE(check_re_property(X, {3, 7}, 500, Seed{24}), 1e-12);
  EXPECT_LE(re_constant_exact(X, {3, 7}), 1e-12);
}

TEST(RestrictedEigenvalue, MoreTrialsNeverIncreaseEstimate) {
  Matrix X = gen_gaussian_design(40, 10, Matrix::Identity(10, 10), Seed{25});
  double prev = std::numeric_limits<double>::infinity();
  for (int trials : {10, 100, 1000}) {
    double v = check_re_property(X, {1, 2}, trials, Seed{26});
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(RestrictedEigenvalue, MonteCarloUpperBoundsExact) {
  for (int t = 0; t < 5; ++t) {
    Matrix X = gen_gaussian_design(30, 8, Matrix::Identity(8, 8), derive(Seed{27}, t));
    double exact = re_constant_exact(X, {0, 4});
    double mc = check_re_property(X, {0, 4}, 2000, derive(Seed{28}, t));
    EXPECT_GE(mc, exact * (1.0 - 1e-9));
    EXPECT_GT(exact, 0.0);
  }
}

TEST(RestrictedEigenvalue, GaussianDesignInRegime) {
  const Index d = 20, k = 2;
  Matrix sigma = toeplitz_covariance(d, 0.5);
  double smin = Eigen::SelfAdjointEigenSolver<Matrix>(sigma).eigenvalues()[0];
  Matrix X = gen_gaussian_design(6000, d, sigma, Seed{29});
  EXPECT_GE(check_re_property(X, {4, 13}, 1000, Seed{30}), smin / 4.0);
  (void)k;
}

TEST(WellSpread, ZeroMAlwaysHolds) {
  Matrix X = Matrix::Zero(5, 5);
  EXPECT_TRUE(check_well_spread(X, {0}, 0, 10, Seed{31}));
}

TEST(WellSpread, ConcentratedRowFails) {
  Matrix X = Matrix::Constant(50, 6, 1e-3);
  X.row(0).setConstant(1e3);
  EXPECT_FALSE(check_well_spread(X, {0}, 1, 100, Seed{32}));
}

TEST(WellSpread, GaussianDesignHolds) {
  const Index n = 4000;
  Matrix X = gen_gaussian_design(n, 20, Matrix::Identity(20, 20), Seed{33});
  EXPECT_TRUE(check_well_spread(X, {1, 9}, n / 1000, 1000, Seed{34}));
}

TEST(Concentration, UnitDirectionLargeN) {
  const Index n = 20000, d = 3;
  Matrix X = gen_gaussian_design(n, d, Matrix::Identity(d, d), Seed{35});
  ConcentrationReport rep = gaussian_concentration(X, Matrix::Identity(d, d), 1.0, 0, Seed{36});
  EXPECT_TRUE(rep.holds);
  EXPECT_NEAR(rep.min_ratio, 1.0, 0.05);
  EXPECT_NEAR(rep.max_ratio, 1.0, 0.05);
}

TEST(Concentration, InRegimeHolds) {
  const Index d = 20;
  Matrix sigma = toeplitz_covariance(d, 0.5);
  Matrix X = gen_gaussian_design(6000, d, sigma, Seed{37});
  EXPECT_TRUE(check_gaussian_concentration(X, sigma, 16.0, 1000, Seed{38}));
}

TEST(Concentration, UnderSampledFails) {
  const Index d = 500;
  Matrix X = gen_gaussian_design(10, d, Matrix::Identity(d, d), Seed{39});
  EXPECT_FALSE(check_gaussian_concentration(X, Matrix::Identity(d, d), 16.0, 1000, Seed{40}));
}

TEST(Certificate, ZeroKappaMarksFormulaInvalid) {
  MetaCertificate c;
  c.gamma = 1.0;
  c.s = 2.0;
  c.kappa = 0.0;
  finalize_radius(c);
  EXPECT_FALSE(c.radius_formula_ok);
  EXPECT_FALSE(c.radius);
  c.kappa = 4.0;
  finalize_radius(c);
  EXPECT_TRUE(c.radius_formula_ok);
  EXPECT_DOUBLE_EQ(c.R, 2.0);
}

TEST(Certificate, InRegimeRegressionHoldsEndToEnd) {
  RegressionProblem p = regression_instance(20000, 20, 2, 0.5, Seed{41});
  EstimatorConstants ec;
  ec.gamma_scale = 6.0;
  SolverConfig cfg;
  cfg.rel_tol = 1e-9;
  RegressionFit fit = estimate_sparse_regression(p, ec, cfg);
  CertificateOptions opts;
  opts.alpha = 0.5;
  opts.seed = Seed{42};
  opts.trials = 300;
  opts.re_trials = 300;
  MetaCertificate c = assemble_certificate(p, fit, opts);
  EXPECT_TRUE(c.decomposability);
  EXPECT_TRUE(c.contraction);
  EXPECT_TRUE(c.gradient_bound);
  EXPECT_TRUE(c.rsc);
  EXPECT_TRUE(c.radius);
  EXPECT_TRUE(c.certified);
  EXPECT_TRUE(c.cone_membership);
  EXPECT_LT(c.error, c.R);
  EXPECT_FALSE(c.contradiction());
  EXPECT_NEAR(c.R, 4.0 * c.gamma * c.s / c.kappa, 1e-12 * c.R);
}

TEST(Certificate, PcaConeMembership) {
  const Index n = 40;
  PcaProblem p;
  p.rho_over_n = 1.0;
  p.zeta = 0.01;
  Matrix L = 0.5 * gen_flat_lowrank(n, 1, 1.0, Seed{43});
  NoiseSpec ns;
  ns.alpha = 1.0;
  ns.zeta = 0.01;
  p.Y = L + gen_oblivious_noise_matrix(n, n, ns, Seed{44});
  p.truth = LowRankTruth{L, 1};
  EstimatorConstants ec;
  ec.gamma_scale = 0.05;
  SolverConfig cfg;
  cfg.rel_tol = 1e-9;
  PcaFit fit = estimate_pca(p, ec, cfg);
  CertificateOptions opts;
  opts.seed = Seed{45};
  opts.trials = 200;
  MetaCertificate c = assemble_certificate(p, fit, opts);
  ConeSampler cone = ConeSampler::lowrank(L, 1);
  Matrix delta = fit.L - L;
  EXPECT_LE(nuclear_norm(delta), 4.0 * nuclear_norm(cone.project_model(delta)) * (1.0 + 1e-6));
  EXPECT_TRUE(c.cone_membership);
}
