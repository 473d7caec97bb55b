#include "robust_huber/verification.hpp"

#include "robust_huber/huber.hpp"
#include "robust_huber/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rh {

namespace {

// Nuclear norm of P Q^T through the small triangular factors.
double factored_nuclear(const Matrix& P, const Matrix& Q) {
  const Index m = P.cols();
  if (m == 0) return 0.0;
  if (P.rows() < m || Q.rows() < m) return nuclear_norm(P * Q.transpose());
  Eigen::HouseholderQR<Matrix> qp(P), qq(Q);
  Matrix rp = qp.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Matrix rq = qq.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  return nuclear_norm(rp * rq.transpose());
}

Matrix gaussian(Index r, Index c, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

Matrix unit_vector(Index d, Index j) {
  Matrix e = Matrix::Zero(d, 1);
  e(j, 0) = 1.0;
  return e;
}

}  // namespace

double reg_norm(RegKind kind, const Matrix& u) {
  return kind == RegKind::l1 ? u.cwiseAbs().sum() : nuclear_norm(u);
}

ConeSampler ConeSampler::sparse(Index d, std::vector<Index> support, double expansion) {
  require(expansion >= 1.0, "cone: expansion factor must be >= 1");
  require(!support.empty(), "cone: support must be non-empty");
  ConeSampler c;
  c.structure_ = Structure::sparse_support;
  c.expansion_ = expansion;
  c.rows_ = d;
  c.cols_ = 1;
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  std::vector<bool> on(d, false);
  for (Index j : support) {
    require(j >= 0 && j < d, "cone: support index out of range");
    on[j] = true;
  }
  c.support_ = std::move(support);
  for (Index j = 0; j < d; ++j)
    if (!on[j]) c.off_support_.push_back(j);
  return c;
}

ConeSampler ConeSampler::lowrank(const Matrix& lstar, Index r, double expansion) {
  require(expansion >= 1.0, "cone: expansion factor must be >= 1");
  require(r >= 1 && r <= std::min(lstar.rows(), lstar.cols()), "cone: rank out of range");
  ConeSampler c;
  c.structure_ = Structure::lowrank_spaces;
  c.expansion_ = expansion;
  c.rows_ = lstar.rows();
  c.cols_ = lstar.cols();
  Eigen::BDCSVD<Matrix> svd(lstar, Eigen::ComputeThinU | Eigen::ComputeThinV);
  c.U_ = svd.matrixU().leftCols(r);
  c.V_ = svd.matrixV().leftCols(r);
  c.Uperp_proj_ = Matrix::Identity(c.rows_, c.rows_) - c.U_ * c.U_.transpose();
  c.Vperp_proj_ = Matrix::Identity(c.cols_, c.cols_) - c.V_ * c.V_.transpose();
  return c;
}

ConeSample ConeSampler::sample(Seed seed, Index trial) const {
  Rng rng = make_rng(derive(seed, static_cast<std::uint64_t>(trial)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double mode = unit(rng);
  // Boundary draws matter most for the extremal ratios, so they get a large share.
  double rho = mode < 0.1 ? 0.0 : (mode < 0.45 ? 1.0 : unit(rng));
  double spread = rho * (expansion_ - 1.0);
  ConeSample out;

  if (structure_ == Structure::sparse_support) {
    Vector u = Vector::Zero(rows_);
    const Index k = static_cast<Index>(support_.size());
    std::uniform_int_distribution<Index> pick_k(1, k);
    Index m = pick_k(rng);
    std::vector<Index> on = support_;
    for (Index i = 0; i < m; ++i) {
      std::uniform_int_distribution<Index> pick(i, k - 1);
      std::swap(on[i], on[pick(rng)]);
    }
    bool flat = unit(rng) < 0.3;
    std::normal_distribution<double> z;
    for (Index i = 0; i < m; ++i) {
      double v = z(rng);
      u[on[i]] = flat ? (v < 0 ? -1.0 : 1.0) : v;
    }
    double l1_on = u.cwiseAbs().sum();
    const Index off = static_cast<Index>(off_support_.size());
    if (off > 0 && spread > 0.0) {
      std::uniform_int_distribution<Index> pick_off(1, off);
      Index q = unit(rng) < 0.5 ? pick_off(rng) : off;
      std::vector<Index> idx = off_support_;
      for (Index i = 0; i < q; ++i) {
        std::uniform_int_distribution<Index> pick(i, off - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      bool heavy = unit(rng) < 0.3;
      std::cauchy_distribution<double> cauchy;
      Vector w = Vector::Zero(rows_);
      for (Index i = 0; i < q; ++i) w[idx[i]] = heavy ? cauchy(rng) : z(rng);
      double l1_off = w.cwiseAbs().sum();
      if (l1_off > 0.0) u += (spread * l1_on / l1_off) * w;
    }
    out.model_reg_norm = l1_on;
    out.reg_norm = u.cwiseAbs().sum();
    out.u = u;
    return out;
  }

  const Index r = U_.cols();
  std::uniform_int_distribution<int> pick_form(0, 3);
  int form = pick_form(rng);
  // Enlarged-model element U X + Y V^T in factored form [U Y] [X^T V]^T.
  Matrix X = gaussian(r, cols_, rng), Y = gaussian(rows_, r, rng);
  if (form == 0) {  // inside the model: U M V^T
    X = gaussian(r, r, rng) * V_.transpose();
    Y.setZero();
  } else if (form == 1) {
    Y.setZero();
  } else if (form == 2) {
    X.setZero();
  }
  Matrix PA(rows_, 2 * r), QA(cols_, 2 * r);
  PA << U_, Y;
  QA << X.transpose(), V_;
  double nuc_a = factored_nuclear(PA, QA);
  if (nuc_a == 0.0) {
    PA.leftCols(r) = U_;
    QA.leftCols(r) = V_;
    QA.rightCols(r).setZero();
    nuc_a = factored_nuclear(PA, QA);
  }

  Matrix P = PA, Q = QA;
  if (spread > 0.0 && rows_ > r && cols_ > r) {
    std::uniform_int_distribution<int> pick_q(1, 3);
    int q = pick_q(rng);
    Matrix PW = Uperp_proj_ * gaussian(rows_, q, rng);
    Matrix QW = Vperp_proj_ * gaussian(cols_, q, rng);
    Matrix Pc(rows_, 2 * r + q), Qc(cols_, 2 * r + q);
    Pc << PA, PW;
    auto norm_at = [&](double c) {
      Qc << QA, c * QW;
      return factored_nuclear(Pc, Qc);
    };
    double nuc_w = factored_nuclear(PW, QW);
    if (nuc_w > 0.0) {
      // ||A + cW|| is convex in c, so the admissible set is an interval [0, c_max].
      double target = expansion_ * nuc_a;
      double lo = 0.0, hi = (expansion_ + 1.0) * nuc_a / nuc_w;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (norm_at(mid) <= target ? lo : hi) = mid;
      }
      double c = rho * lo;
      Qc << QA, c * QW;
      P = Pc;
      Q = Qc;
    }
  }
  out.u = P * Q.transpose();
  out.reg_norm = factored_nuclear(P, Q);
  out.model_reg_norm = nuc_a;
  return out;
}

std::vector<ConeSample> ConeSampler::structured() const {
  std::vector<ConeSample> out;
  if (structure_ == Structure::sparse_support) {
    for (Index j : support_) out.push_back({unit_vector(rows_, j), 1.0, 1.0});
    if (expansion_ > 1.0) {
      Index lim = std::min<Index>(static_cast<Index>(off_support_.size()), 50);
      for (Index i = 0; i < lim; ++i) {
        Matrix u = unit_vector(rows_, support_.front());
        u(off_support_[i], 0) = expansion_ - 1.0;
        out.push_back({u, expansion_, 1.0});
      }
    }
    return out;
  }
  const Index r = U_.cols();
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) out.push_back({U_.col(i) * V_.col(j).transpose(), 1.0, 1.0});
  if (expansion_ > 1.0 && rows_ > r && cols_ > r) {
    Index ci, cj;
    Uperp_proj_.diagonal().maxCoeff(&ci);
    Vperp_proj_.diagonal().maxCoeff(&cj);
    Vector a = Uperp_proj_.col(ci).normalized(), b = Vperp_proj_.col(cj).normalized();
    Matrix base = U_.col(0) * V_.col(0).transpose();
    out.push_back({base + (expansion_ - 1.0) * a * b.transpose(), expansion_, 1.0});
  }
  return out;
}

Matrix ConeSampler::project_model(const Matrix& u) const {
  require(u.rows() == rows_ && u.cols() == cols_, "cone: direction has the wrong shape");
  if (structure_ == Structure::sparse_support) {
    Matrix p = Matrix::Zero(rows_, 1);
    for (Index j : support_) p(j, 0) = u(j, 0);
    return p;
  }
  return u - Uperp_proj_ * u * Vperp_proj_;
}

double ConeSampler::reg_norm(const Matrix& u) const { return rh::reg_norm(reg_kind(), u); }

double ConeSampler::cone_ratio(const Matrix& u) const {
  double whole = reg_norm(u);
  if (whole == 0.0) return 0.0;
  double part = reg_norm(project_model(u));
  return part > 0.0 ? whole / part : std::numeric_limits<double>::infinity();
}

bool ConeSampler::contains(const Matrix& u, double rel_tol) const {
  double whole = reg_norm(u);
  double part = reg_norm(project_model(u));
  return whole <= expansion_ * part * (1.0 + rel_tol) + 1e-300;
}

bool check_decomposability(const std::function<double(const Matrix&)>& norm, const SubspaceDraw& draw_model,
                           const SubspaceDraw& draw_perp, int trials, Seed seed) {
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(derive(seed, static_cast<std::uint64_t>(t)));
    Matrix u = draw_model(rng), v = draw_perp(rng);
    double nu = norm(u), nv = norm(v), nuv = norm(u + v);
    if (std::abs(nuv - nu - nv) > 1e-9 * (nu + nv)) return false;
  }
  return true;
}

bool check_decomposability(const std::function<double(const Matrix&)>& norm, const std::vector<Matrix>& model_basis,
                           const std::vector<Matrix>& perp_basis, int trials, Seed seed) {
  require(!model_basis.empty() && !perp_basis.empty(), "decomposability: empty basis");
  auto combo = [](const std::vector<Matrix>& basis) {
    return [&basis](Rng& rng) {
      std::normal_distribution<double> z;
      Matrix m = Matrix::Zero(basis.front().rows(), basis.front().cols());
      for (const auto& b : basis) m += z(rng) * b;
      return m;
    };
  };
  return check_decomposability(norm, combo(model_basis), combo(perp_basis), trials, seed);
}

std::pair<std::vector<Matrix>, std::vector<Matrix>> l1_decomposition_bases(Index d, const std::vector<Index>& support) {
  std::vector<bool> on(d, false);
  for (Index j : support) on[j] = true;
  std::vector<Matrix> model, perp;
  for (Index j = 0; j < d; ++j) (on[j] ? model : perp).push_back(unit_vector(d, j));
  return {model, perp};
}

std::pair<std::vector<Matrix>, std::vector<Matrix>> nuclear_decomposition_bases(const Matrix& U, const Matrix& V) {
  auto complement = [](const Matrix& B) {
    Eigen::HouseholderQR<Matrix> qr(B);
    Matrix full = qr.householderQ() * Matrix::Identity(B.rows(), B.rows());
    return Matrix(full.rightCols(B.rows() - B.cols()));
  };
  Matrix Up = complement(U), Vp = complement(V);
  std::vector<Matrix> model, perp;
  for (Index i = 0; i < U.cols(); ++i)
    for (Index j = 0; j < V.cols(); ++j) model.push_back(U.col(i) * V.col(j).transpose());
  for (Index i = 0; i < Up.cols(); ++i)
    for (Index j = 0; j < Vp.cols(); ++j) perp.push_back(Up.col(i) * Vp.col(j).transpose());
  return {model, perp};
}

ErrorMetric regression_error_metric(const Matrix& X) {
  const Matrix* x = &X;
  return [x](const Matrix& u) { return (*x * u).norm() / std::sqrt(static_cast<double>(x->rows())); };
}

ErrorMetric frobenius_metric() {
  return [](const Matrix& u) { return u.norm(); };
}

double measure_contraction(const ConeSampler& cone, const ErrorMetric& metric, int trials, Seed seed) {
  double worst = 0.0;
  auto visit = [&](const ConeSample& s) {
    double e = metric(s.u);
    if (!(e > 1e-14 * std::max(1.0, s.u.norm()))) throw NumericError("contraction: error metric vanishes on a cone direction");
    worst = std::max(worst, s.reg_norm / e);
  };
  for (const auto& s : cone.structured()) visit(s);
  for (int t = 0; t < trials; ++t) visit(cone.sample(seed, t));
  return worst;
}

double measure_gradient_dual_norm(const RegressionProblem& p, const Vector& truth) {
  require(truth.size() == p.d(), "gradient: truth has the wrong dimension");
  Vector r = p.y - p.X * truth;
  Vector g = p.X.transpose() * huber_loss_grad(r, HuberParams(2.0)).col(0);
  return dual_norm_linf(g);
}

double measure_gradient_dual_norm(const PcaProblem& p, const Matrix& truth, double h) {
  require(truth.rows() == p.n() && truth.cols() == p.n(), "gradient: truth has the wrong shape");
  return dual_norm_spectral(huber_loss_grad(p.Y - truth, HuberParams(h)));
}

double regression_gradient_bound(Index n, Index d, double nu, double delta) {
  require(delta > 0.0 && delta < 1.0, "gradient bound: delta must lie in (0,1)");
  return 20.0 * std::sqrt(nu * static_cast<double>(n) * (std::log(static_cast<double>(d)) + std::log(2.0 / delta)));
}

double pca_gradient_bound(Index n, double h, double delta) {
  require(delta > 0.0 && delta < 1.0, "gradient bound: delta must lie in (0,1)");
  return 10.0 * h * std::sqrt(static_cast<double>(n) + std::log(2.0 / delta));
}

namespace {

// Everything needed to evaluate the first-order remainder of the loss around the truth.
struct CurvatureModel {
  Vector eta;  // residuals at the truth, flattened
  HuberParams hp{2.0};
  std::function<Vector(const Matrix&)> image;  // how a direction moves the residuals (with sign flipped)
  ErrorMetric metric;
  // Largest t >= 0 with truth + t u feasible.
  std::function<double(const Matrix&)> max_scale;

  double bracket(const Vector& x) const {
    CompensatedSum acc;
    for (Index i = 0; i < eta.size(); ++i) acc.add(huber_bregman(eta[i], -x[i], hp));
    return std::max(0.0, acc.value());
  }
};

CurvatureModel regression_model(const RegressionProblem& p, const Vector& truth) {
  CurvatureModel m;
  m.eta = p.y - p.X * truth;
  const Matrix* X = &p.X;
  m.image = [X](const Matrix& u) -> Vector { return *X * u.col(0); };
  m.metric = regression_error_metric(p.X);
  m.max_scale = [](const Matrix&) { return std::numeric_limits<double>::infinity(); };
  return m;
}

CurvatureModel pca_model(const PcaProblem& p, const Matrix& truth, double h) {
  CurvatureModel m;
  Matrix res = p.Y - truth;
  m.eta = Eigen::Map<const Vector>(res.data(), res.size());
  m.hp = HuberParams(h);
  m.image = [](const Matrix& u) -> Vector { return Eigen::Map<const Vector>(u.data(), u.size()); };
  m.metric = frobenius_metric();
  const Matrix* L = &truth;
  double radius = p.rho_over_n;
  m.max_scale = [L, radius](const Matrix& u) {
    double t = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < u.size(); ++i) {
      double ui = u.data()[i];
      if (ui == 0.0) continue;
      double room = ui > 0 ? radius - L->data()[i] : radius + L->data()[i];
      t = std::min(t, std::max(0.0, room) / std::abs(ui));
    }
    return t;
  };
  return m;
}

RscEstimate rsc_core(const CurvatureModel& model, const ConeSampler& cone, double R, int trials, Seed seed) {
  require(R > 0.0, "rsc: radius must be positive");
  RscEstimate est;
  est.kappa = std::numeric_limits<double>::infinity();
  est.min_bracket = std::numeric_limits<double>::infinity();
  auto visit = [&](const Matrix& dir) {
    ++est.attempts;
    double e = model.metric(dir);
    if (!(e > 0.0)) return;
    Matrix u = dir * (R / e);
    if (model.max_scale(u) < 1.0) return;
    double b = model.bracket(model.image(u));
    est.min_bracket = std::min(est.min_bracket, b);
    est.kappa = std::min(est.kappa, b / (0.5 * R * R));
    ++est.samples;
  };
  for (const auto& s : cone.structured()) visit(s.u);
  const int max_attempts = 20 * std::max(trials, 1);
  for (int t = 0; t < max_attempts && est.samples < trials + 1; ++t) visit(cone.sample(seed, t).u);
  if (est.samples == 0) throw SamplingError("rsc: no feasible cone direction at the requested radius");
  return est;
}

}  // namespace

RscEstimate estimate_rsc(const RegressionProblem& p, const Vector& truth, const ConeSampler& cone, double R,
                         int trials, Seed seed) {
  return rsc_core(regression_model(p, truth), cone, R, trials, seed);
}

RscEstimate estimate_rsc(const PcaProblem& p, const Matrix& truth, double h, const ConeSampler& cone, double R,
                         int trials, Seed seed) {
  return rsc_core(pca_model(p, truth, h), cone, R, trials, seed);
}

double check_re_property(const Matrix& X, const std::vector<Index>& support, int trials, Seed seed) {
  ConeSampler cone = ConeSampler::sparse(X.cols(), support, 10.0);
  const double n = static_cast<double>(X.rows());
  double best = std::numeric_limits<double>::infinity();
  auto visit = [&](const Matrix& u) {
    double nu = u.squaredNorm();
    if (nu > 0.0) best = std::min(best, (X * u).squaredNorm() / (n * nu));
  };
  for (const auto& s : cone.structured()) visit(s.u);
  for (int t = 0; t < trials; ++t) visit(cone.sample(seed, t).u);
  return best;
}

double re_constant_exact(const Matrix& X, const std::vector<Index>& support) {
  const Index d = X.cols();
  require(d >= 1 && d <= 12, "re_constant_exact: enumeration is limited to d <= 12");
  require(!support.empty(), "re_constant_exact: empty support");
  const Matrix A = X.transpose() * X / static_cast<double>(X.rows());
  std::vector<bool> on(d, false);
  for (Index j : support) on[j] = true;

  auto in_cone = [&](const Vector& u) {
    double all = u.cwiseAbs().sum(), part = 0.0;
    for (Index j = 0; j < d; ++j)
      if (on[j]) part += std::abs(u[j]);
    return part >= 0.1 * all - 1e-12 * all;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> state(d, 0);  // 0: zero, 1: positive, 2: negative
  long long total = 1;
  for (Index j = 0; j < d; ++j) total *= 3;
  for (long long code = 1; code < total; ++code) {
    long long c = code;
    for (Index j = 0; j < d; ++j) {
      state[j] = static_cast<int>(c % 3);
      c /= 3;
    }
    // Global sign symmetry: first nonzero coordinate positive.
    Index first = 0;
    while (state[first] == 0) ++first;
    if (state[first] == 2) continue;
    std::vector<Index> free;
    for (Index j = 0; j < d; ++j)
      if (state[j] != 0) free.push_back(j);
    const Index f = static_cast<Index>(free.size());
    Matrix Af(f, f);
    Vector cvec(f);
    for (Index a = 0; a < f; ++a) {
      double sgn = state[free[a]] == 1 ? 1.0 : -1.0;
      cvec[a] = sgn * ((on[free[a]] ? 1.0 : 0.0) - 0.1);
      for (Index b = 0; b < f; ++b) Af(a, b) = A(free[a], free[b]);
    }
    for (int active = 0; active < 2; ++active) {
      Matrix basis;
      if (active) {
        if (f < 2 || cvec.norm() == 0.0) continue;
        Eigen::HouseholderQR<Matrix> qr{Matrix(cvec)};
        Matrix full = qr.householderQ() * Matrix::Identity(f, f);
        basis = full.rightCols(f - 1);
      } else {
        basis = Matrix::Identity(f, f);
      }
      Matrix M = basis.transpose() * Af * basis;
      Eigen::SelfAdjointEigenSolver<Matrix> es(M);
      if (es.info() != Eigen::Success) throw NumericError("re_constant_exact: eigen solver failed");
      double lam = es.eigenvalues()[0];
      if (lam >= best) continue;
      Vector w = basis * es.eigenvectors().col(0);
      for (double sgn : {1.0, -1.0}) {
        Vector u = Vector::Zero(d);
        for (Index a = 0; a < f; ++a) u[free[a]] = sgn * w[a];
        if (in_cone(u)) {
          best = lam;
          break;
        }
      }
    }
  }
  return std::max(0.0, best);
}

bool check_well_spread(const Matrix& X, const std::vector<Index>& support, Index m, int trials, Seed seed) {
  if (m <= 0) return true;
  require(m <= X.rows(), "well-spread: m exceeds n");
  ConeSampler cone = ConeSampler::sparse(X.cols(), support, 10.0);
  std::vector<double> sq;
  auto ok = [&](const Matrix& u) {
    Vector x = X * u.col(0);
    double total = x.squaredNorm();
    if (total == 0.0) return true;
    sq.assign(x.size(), 0.0);
    for (Index i = 0; i < x.size(); ++i) sq[i] = x[i] * x[i];
    std::nth_element(sq.begin(), sq.begin() + (m - 1), sq.end(), std::greater<double>());
    double removed = 0.0;
    for (Index i = 0; i < m; ++i) removed += sq[i];
    double rest = std::sqrt(std::max(0.0, total - removed));
    return rest >= 0.5 * std::sqrt(total) * (1.0 - 1e-12);
  };
  for (const auto& s : cone.structured())
    if (!ok(s.u)) return false;
  for (int t = 0; t < trials; ++t)
    if (!ok(cone.sample(seed, t).u)) return false;
  return true;
}

ConcentrationReport gaussian_concentration(const Matrix& X, const Matrix& sigma, double K, int trials, Seed seed) {
  const Index d = X.cols();
  require(K >= 1.0, "concentration: K must be >= 1");
  require(sigma.rows() == d && sigma.cols() == d, "concentration: Sigma has the wrong shape");
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericError("concentration: Sigma is not positive definite");
  const double sqrt_n = std::sqrt(static_cast<double>(X.rows()));
  ConcentrationReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  auto visit = [&](const Vector& u) {
    double pop = std::sqrt(u.dot(sigma * u));
    if (pop == 0.0) return;
    double ratio = (X * u).norm() / sqrt_n / pop;
    ++rep.samples;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio < 0.5 || ratio > 2.0) ++rep.violations;
  };
  for (Index j = 0; j < d; ++j) visit(unit_vector(d, j).col(0));
  const Index smax = std::max<Index>(1, std::min<Index>(d, static_cast<Index>(std::floor(K))));
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(derive(seed, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<Index> pick_s(1, smax);
    std::normal_distribution<double> z;
    Index s = pick_s(rng);
    std::vector<Index> idx(d);
    std::iota(idx.begin(), idx.end(), Index{0});
    Vector u = Vector::Zero(d);
    for (Index i = 0; i < s; ++i) {
      std::uniform_int_distribution<Index> pick(i, d - 1);
      std::swap(idx[i], idx[pick(rng)]);
      u[idx[i]] = z(rng);
    }
    // Approximately sparse variant: add a dense tail while staying inside the l1 cone.
    Vector tail(d);
    for (Index j = 0; j < d; ++j) tail[j] = z(rng);
    double scale = std::uniform_real_distribution<double>(0.0, 0.3)(rng) * u.norm() / tail.norm();
    Vector v = u + scale * tail;
    if (v.cwiseAbs().sum() <= std::sqrt(K) * v.norm()) u = v;
    visit(u);
  }
  rep.holds = rep.violations == 0;
  return rep;
}

bool check_gaussian_concentration(const Matrix& X, const Matrix& sigma, double K, int trials, Seed seed) {
  return gaussian_concentration(X, sigma, K, trials, seed).holds;
}

void finalize_radius(MetaCertificate& c) {
  c.radius_formula_ok = c.kappa > 0.0 && std::isfinite(c.kappa) && std::isfinite(c.gamma) && std::isfinite(c.s);
  if (!c.radius_formula_ok) {
    c.R = std::numeric_limits<double>::infinity();
    c.radius = false;
    return;
  }
  c.R = 4.0 * c.gamma * c.s / c.kappa;
  c.radius = std::isfinite(c.R) && c.gamma * c.s / c.kappa <= c.R / 4.0 * (1.0 + 1e-12);
}

std::string MetaCertificate::to_report() const {
  std::ostringstream os;
  os.precision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "kind=" << kind << "\n"
     << "gamma=" << gamma << "\n"
     << "gradient_dual_norm=" << gradient_dual_norm << "\n"
     << "gamma_measured=" << gamma_measured << "\n"
     << "s=" << s << "\n"
     << "s_measured=" << s_measured << "\n"
     << "lambda_hat=" << lambda_hat << "\n"
     << "kappa=" << kappa << "\n"
     << "R=" << R << "\n"
     << "rsc_active_samples=" << rsc_active_samples << "\n"
     << "kappa_nominal=" << kappa_nominal << "\n"
     << "nominal_radius=" << nominal_radius << "\n"
     << "kappa_at_nominal_radius=" << kappa_at_nominal_radius << "\n"
     << "cond_decomposability=" << b(decomposability) << "\n"
     << "cond_contraction=" << b(contraction) << "\n"
     << "cond_gradient_bound=" << b(gradient_bound) << "\n"
     << "cond_rsc=" << b(rsc) << "\n"
     << "cond_radius=" << b(radius) << "\n"
     << "radius_formula_ok=" << b(radius_formula_ok) << "\n"
     << "nominal_radius_premise=" << b(nominal_radius_premise) << "\n"
     << "certified=" << b(certified) << "\n"
     << "cone_ratio=" << cone_ratio << "\n"
     << "cone_membership=" << b(cone_membership) << "\n"
     << "error=" << error << "\n"
     << "error_within_radius=" << b(error_within_radius) << "\n";
  return os.str();
}

namespace {

// Smallest radius at which every sampled direction still feasible there has
// 2 * bracket(R u) / R >= target. Along a ray the remainder over the step length is
// non-decreasing (convexity, zero value and slope at the origin), so each direction
// has a threshold found by bisection and the certified radius is their maximum.
struct RadiusSearch {
  double radius = std::numeric_limits<double>::infinity();
  int active = 0;
  int total = 0;
};

RadiusSearch search_radius(const CurvatureModel& model, const std::vector<Matrix>& directions, double target) {
  RadiusSearch out;
  struct Dir {
    Vector x;
    double max_r;
    double thresh;
  };
  std::vector<Dir> dirs;
  for (const auto& d : directions) {
    double e = model.metric(d);
    if (!(e > 0.0)) continue;
    Matrix u = d / e;
    dirs.push_back({model.image(u), model.max_scale(u), 0.0});
  }
  out.total = static_cast<int>(dirs.size());
  if (dirs.empty()) return out;
  auto phi = [&](const Vector& x, double R) { return 2.0 * model.bracket(R * x) / R; };
  const double cap = 1e12;
  double need = 0.0;
  for (auto& d : dirs) {
    double hi = 1.0;
    while (phi(d.x, hi) < target && hi < cap) hi *= 2.0;
    if (phi(d.x, hi) < target) {
      d.thresh = std::numeric_limits<double>::infinity();
    } else {
      double lo = 0.0;
      for (int it = 0; it < 80 && hi - lo > 1e-7 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (phi(d.x, mid) >= target ? hi : lo) = mid;
      }
      d.thresh = hi;
    }
    // A direction stops constraining once it leaves the feasible set.
    need = std::max(need, std::min(d.thresh, d.max_r));
  }
  out.radius = need;
  if (!std::isfinite(need)) return out;
  for (const auto& d : dirs)
    if (d.max_r >= need && phi(d.x, need) >= target * (1.0 - 1e-9)) ++out.active;
  return out;
}

void common_tail(MetaCertificate& c, const CurvatureModel& model, const ConeSampler& cone, const Matrix& delta_hat,
                 const CertificateOptions& opts) {
  std::vector<Matrix> dirs;
  for (const auto& s : cone.structured()) dirs.push_back(s.u);
  for (int t = 0; t < opts.trials; ++t) dirs.push_back(cone.sample(derive(opts.seed, 7), t).u);
  if (delta_hat.norm() > 0.0 && cone.contains(delta_hat, 1e-6)) dirs.push_back(delta_hat);

  double target = 4.0 * c.gamma * c.s;
  RadiusSearch rs = search_radius(model, dirs, target);
  c.rsc_active_samples = rs.active;
  bool enough = rs.active >= std::max(1, static_cast<int>(std::ceil(opts.min_active_fraction * rs.total)));
  if (std::isfinite(rs.radius) && rs.radius > 0.0) {
    c.kappa = target / rs.radius;
    c.rsc = enough;
  } else {
    c.kappa = 0.0;
    c.rsc = false;
  }
  finalize_radius(c);
  c.radius = c.radius && c.rsc;

  c.cone_ratio = cone.cone_ratio(delta_hat);
  c.cone_membership = delta_hat.norm() == 0.0 || c.cone_ratio <= opts.expansion * (1.0 + 1e-6);
  c.error = model.metric(delta_hat);
  c.error_within_radius = c.error < c.R;
}

}  // namespace

MetaCertificate assemble_certificate(const RegressionProblem& p, const RegressionFit& fit,
                                     const CertificateOptions& opts) {
  require(p.truth.has_value(), "certificate: truth missing");
  p.validate();
  MetaCertificate c;
  c.kind = "regression";
  const auto& truth = *p.truth;
  const Index n = p.n(), d = p.d();
  c.gamma = fit.gamma;
  c.certified = fit.certified.value_or(false);

  auto bases = l1_decomposition_bases(d, truth.support);
  c.decomposability = bases.second.empty() ||
                      check_decomposability([](const Matrix& u) { return u.cwiseAbs().sum(); }, bases.first,
                                            bases.second, opts.decomposability_trials, derive(opts.seed, 1));

  ConeSampler cone = ConeSampler::sparse(d, truth.support, opts.expansion);
  ErrorMetric metric = regression_error_metric(p.X);
  c.lambda_hat = check_re_property(p.X, truth.support, opts.re_trials, derive(opts.seed, 2));
  c.s = c.lambda_hat > 0.0 ? 4.0 * std::sqrt(static_cast<double>(truth.k) / c.lambda_hat)
                           : std::numeric_limits<double>::infinity();
  c.s_measured = measure_contraction(cone, metric, opts.trials, derive(opts.seed, 3));
  c.contraction = std::isfinite(c.s) && c.s_measured <= c.s * (1.0 + 1e-9);

  c.gradient_dual_norm = measure_gradient_dual_norm(p, truth.beta);
  c.gamma_measured = 2.0 * c.gradient_dual_norm;
  c.gradient_bound = c.gradient_dual_norm <= 0.5 * c.gamma;

  CurvatureModel model = regression_model(p, truth.beta);
  const double nd = static_cast<double>(n);
  double nu = p.design ? p.design->nu : (p.X.colwise().squaredNorm().maxCoeff() / nd);
  double lam = c.lambda_hat > 0.0 ? c.lambda_hat : 1.0;
  c.kappa_nominal = 0.01 * opts.alpha * nd;
  c.nominal_radius = 100.0 * std::sqrt((nu * truth.k * std::log(static_cast<double>(d)) + std::log(2.0 / opts.delta)) /
                                     (lam * opts.alpha * opts.alpha * nd));
  c.kappa_at_nominal_radius =
      rsc_core(model, cone, c.nominal_radius, opts.trials, derive(opts.seed, 4)).kappa;
  Index m = p.design ? p.design->m : 0;
  c.nominal_radius_premise = static_cast<double>(m) >= 4.0 * c.nominal_radius * c.nominal_radius * nd;

  Matrix delta_hat = Matrix(fit.beta - truth.beta);
  common_tail(c, model, cone, delta_hat, opts);
  return c;
}

MetaCertificate assemble_certificate(const PcaProblem& p, const PcaFit& fit, const CertificateOptions& opts) {
  require(p.truth.has_value(), "certificate: truth missing");
  p.validate();
  MetaCertificate c;
  c.kind = "pca";
  const auto& truth = *p.truth;
  const Index n = p.n(), r = truth.r;
  c.gamma = fit.gamma;
  c.certified = fit.certified.value_or(false);

  ConeSampler cone = ConeSampler::lowrank(truth.L, r, opts.expansion);
  const Matrix& U = cone.col_span();
  const Matrix& V = cone.row_span();
  SubspaceDraw draw_model = [&](Rng& rng) -> Matrix { return U * gaussian(r, r, rng) * V.transpose(); };
  Matrix Pu = Matrix::Identity(n, n) - U * U.transpose(), Pv = Matrix::Identity(n, n) - V * V.transpose();
  SubspaceDraw draw_perp = [&](Rng& rng) -> Matrix {
    return (Pu * gaussian(n, 2, rng)) * (Pv * gaussian(n, 2, rng)).transpose();
  };
  c.decomposability = check_decomposability([](const Matrix& u) { return nuclear_norm(u); }, draw_model, draw_perp,
                                            opts.decomposability_trials, derive(opts.seed, 1));

  c.s = 4.0 * std::sqrt(2.0 * static_cast<double>(r));
  c.s_measured = measure_contraction(cone, frobenius_metric(), opts.trials, derive(opts.seed, 3));
  c.contraction = c.s_measured <= c.s * (1.0 + 1e-9);

  c.gradient_dual_norm = measure_gradient_dual_norm(p, truth.L, fit.h);
  c.gamma_measured = 2.0 * c.gradient_dual_norm;
  c.gradient_bound = c.gradient_dual_norm <= 0.5 * c.gamma;

  CurvatureModel model = pca_model(p, truth.L, fit.h);
  c.kappa_nominal = 0.01 * opts.alpha;
  c.nominal_radius = 2000.0 * p.rho_over_n / opts.alpha *
                   std::sqrt(static_cast<double>(r * n) + std::log(2.0 / opts.delta));
  c.nominal_radius_premise = false;
  // Largest Frobenius distance from the truth that stays inside the box.
  double reach = std::sqrt((p.rho_over_n + truth.L.cwiseAbs().array()).square().sum());
  if (c.nominal_radius > reach) {
    c.kappa_at_nominal_radius = std::numeric_limits<double>::quiet_NaN();
  } else try {
    c.kappa_at_nominal_radius = rsc_core(model, cone, c.nominal_radius, opts.trials, derive(opts.seed, 4)).kappa;
    c.nominal_radius_premise = true;
  } catch (const SamplingError&) {
    // The premise radius lies outside the max-norm box: reported, not guessed around.
    c.kappa_at_nominal_radius = std::numeric_limits<double>::quiet_NaN();
  }

  Matrix delta_hat = fit.L - truth.L;
  common_tail(c, model, cone, delta_hat, opts);
  return c;
}

}  // namespace rh
