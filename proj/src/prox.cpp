#include "robust_huber/prox.hpp"

#include <cmath>
#include <sstream>

namespace rh {

namespace {

struct Svd {
  Vector s;
  Matrix U, V;
};

template <class Decomp>
bool take(const Decomp& d, bool vectors, Svd& out) {
  if (d.info() != Eigen::Success || !d.singularValues().allFinite()) return false;
  out.s = d.singularValues();
  if (vectors) {
    out.U = d.matrixU();
    out.V = d.matrixV();
  }
  return true;
}

// Divide-and-conquer first; one-sided Jacobi when it reports non-convergence.
Svd full_svd(const Matrix& m, bool vectors) {
  int opts = vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0;
  Svd out;
  if (take(Eigen::BDCSVD<Matrix>(m, opts), vectors, out)) return out;
  if (m.allFinite() && take(Eigen::JacobiSVD<Matrix>(m, opts), vectors, out)) return out;
  std::ostringstream os;
  os << "svd failed on " << m.rows() << "x" << m.cols() << " matrix, max|entry|="
     << (m.size() ? m.cwiseAbs().maxCoeff() : 0.0) << ", finite=" << m.allFinite();
  throw NumericError(os.str());
}

}  // namespace

Vector prox_l1(const Vector& v, double t) {
  require(t >= 0.0, "prox_l1: negative weight");
  Vector x(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]) - t;
    x[i] = a > 0.0 ? std::copysign(a, v[i]) : 0.0;
  }
  return x;
}

namespace {

// Thresholding through the Gram eigendecomposition; only the kept pairs are formed.
// Returns false when the threshold is too small against the top singular value for
// squared singular values to be resolved, leaving the caller to use a full SVD.
bool gram_threshold(const Matrix& m, double t, SvtResult& out) {
  const bool tall = m.rows() >= m.cols();
  Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) return false;
  const Vector& ev = es.eigenvalues();  // ascending
  const double top = ev[ev.size() - 1];
  if (top <= 0.0) {
    out.point = Matrix::Zero(m.rows(), m.cols());
    return true;
  }
  if (t * t < kGramThresholdFloor * top) return false;
  Index k = 0;
  while (k < ev.size() && ev[ev.size() - 1 - k] > t * t) ++k;
  const Matrix basis = es.eigenvectors().rightCols(k);
  Vector scale(k);
  for (Index i = 0; i < k; ++i) {
    double sigma = std::sqrt(ev[ev.size() - k + i]);
    scale[i] = 1.0 - t / sigma;
    out.nuclear_norm += sigma - t;
  }
  out.rank = k;
  out.point = tall ? Matrix(m * basis * scale.asDiagonal() * basis.transpose())
                   : Matrix(basis * scale.asDiagonal() * basis.transpose() * m);
  return true;
}

}  // namespace

SvtResult singular_value_threshold(const Matrix& m, double t) {
  require(t >= 0.0, "prox_nuclear: negative weight");
  SvtResult out;
  if (m.size() == 0) {
    out.point = m;
    return out;
  }
  if (t > 0.0 && m.allFinite() && gram_threshold(m, t, out)) return out;
  out = SvtResult{};
  auto svd = full_svd(m, true);
  const Vector& s = svd.s;
  double cutoff = kRankTol * (s.size() ? s[0] : 0.0);
  Vector shrunk(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    double v = s[i] - t;
    shrunk[i] = (v > 0.0 && s[i] > cutoff) ? v : 0.0;
    if (shrunk[i] > 0.0) {
      out.nuclear_norm += shrunk[i];
      ++out.rank;
    }
  }
  Index k = out.rank;  // singular values come sorted, so the kept ones lead
  out.point = svd.U.leftCols(k) * shrunk.head(k).asDiagonal() * svd.V.leftCols(k).transpose();
  return out;
}

Matrix prox_nuclear(const Matrix& m, double t) {
  if (t == 0.0) return m;
  return singular_value_threshold(m, t).point;
}

Matrix project_maxnorm(const Matrix& m, double radius) {
  require(radius > 0.0, "project_maxnorm: radius must be positive");
  return m.cwiseMax(-radius).cwiseMin(radius);
}

double dual_norm_linf(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return full_svd(m, false).s;
}

double dual_norm_spectral(const Matrix& m) {
  Vector s = singular_values(m);
  return s.size() ? s[0] : 0.0;
}

double nuclear_norm(const Matrix& m) {
  Vector s = singular_values(m);
  return s.sum();
}

Index numeric_rank(const Matrix& m) {
  Vector s = singular_values(m);
  if (s.size() == 0 || s[0] == 0.0) return 0;
  return (s.array() > kRankTol * s[0]).count();
}

double spectral_norm_power(const Matrix& a, int max_iters, double tol) {
  if (a.size() == 0) return 0.0;
  // Deterministic start with no special alignment to coordinate axes.
  Vector x(a.cols());
  for (Index i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector y = a.transpose() * (a * x);
    double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    if (!std::isfinite(nrm)) throw NumericError("power iteration: non-finite iterate");
    x = y / nrm;
    double next = std::sqrt(nrm);
    if (std::abs(next - est) <= tol * next) return next;
    est = next;
  }
  return est;
}

}  // namespace rh
