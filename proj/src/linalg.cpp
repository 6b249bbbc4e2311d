#include "ssn/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "ssn/rng.hpp"

namespace ssn {

namespace {

// Plain right-looking Cholesky; false on a nonpositive pivot.
bool cholesky_in_place(Matrix& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - a.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) a(i, j) = (a(i, j) - a.row(i).head(j).dot(a.row(j).head(j))) / d;
  }
  a.triangularView<Eigen::StrictlyUpper>().setZero();
  return true;
}

}  // namespace

SpdFactor spd_factor(const Matrix& h) {
  if (h.rows() != h.cols()) throw DimensionError("spd_factor: matrix must be square");
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1.0);
  if (h.size() > 0 && (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("spd_factor: matrix is not symmetric");

  SpdFactor f;
  f.lower_ = h;
  if (cholesky_in_place(f.lower_)) return f;

  const double p = static_cast<double>(std::max<Eigen::Index>(h.rows(), 1));
  double jitter = 1e-12 * std::abs(h.trace()) / p;
  if (!(jitter > 0.0)) jitter = 1e-12;
  for (int attempt = 0; attempt < 4; ++attempt, jitter *= 10.0) {
    f.lower_ = h;
    f.lower_.diagonal().array() += jitter;
    if (cholesky_in_place(f.lower_)) {
      f.jitter_ = jitter;
      return f;
    }
  }
  throw NotSpdError("spd_factor: matrix is not positive definite");
}

Vector SpdFactor::solve(const Vector& b) const {
  if (b.size() != lower_.rows()) throw DimensionError("spd_solve: right-hand side has wrong length");
  Vector y = lower_.triangularView<Eigen::Lower>().solve(b);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdFactor::reconstruct() const {
  Matrix h = lower_ * lower_.transpose();
  h.diagonal().array() -= jitter_;
  return h;
}

Vector spd_solve(const SpdFactor& f, const Vector& b) { return f.solve(b); }

PcgResult pcg(const LinearOperator& apply_a, const Vector& b, const LinearOperator& precond_solve, double tol_abs,
              std::size_t max_iter) {
  if (!b.allFinite()) throw std::domain_error("pcg: right-hand side is not finite");
  PcgResult res;
  res.solution = Vector::Zero(b.size());
  Vector r = b;
  res.residual_norm = r.norm();
  if (res.residual_norm <= tol_abs) {
    res.converged = true;
    return res;
  }
  Vector y = precond_solve(r);
  Vector d = y;
  double ry = r.dot(y);
  while (res.iterations < max_iter) {
    const Vector ad = apply_a(d);
    const double curv = d.dot(ad);
    if (!(curv > 0.0) || !std::isfinite(curv)) throw NegativeCurvatureError("pcg: nonpositive curvature dᵀAd");
    const double alpha = ry / curv;
    res.solution += alpha * d;
    r -= alpha * ad;
    ++res.iterations;
    res.residual_norm = r.norm();
    bool restart = false;
    if (res.residual_norm <= tol_abs) {
      // Confirm against the true residual; the recurrence can drift.
      r = b - apply_a(res.solution);
      res.residual_norm = r.norm();
      if (res.residual_norm <= tol_abs) {
        res.converged = true;
        break;
      }
      restart = true;
    }
    y = precond_solve(r);
    if (restart) {
      d = y;
      ry = r.dot(y);
      continue;
    }
    const double ry_next = r.dot(y);
    d = y + (ry_next / ry) * d;
    ry = ry_next;
  }
  return res;
}

namespace {

TopEigen truncate_sorted(const Vector& ascending_values, const Matrix& ascending_vectors, std::size_t r) {
  const auto p = ascending_values.size();
  TopEigen out;
  out.values.resize(static_cast<Eigen::Index>(r + 1));
  out.vectors.resize(ascending_vectors.rows(), static_cast<Eigen::Index>(r));
  for (Eigen::Index k = 0; k <= static_cast<Eigen::Index>(r); ++k) {
    out.values[k] = ascending_values[p - 1 - k];
    if (k < static_cast<Eigen::Index>(r)) out.vectors.col(k) = ascending_vectors.col(p - 1 - k);
  }
  return out;
}

TopEigen dense_top(const Matrix& h, std::size_t r) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) throw EigenConvergenceError("top_r_eig: symmetric QR did not converge");
  return truncate_sorted(es.eigenvalues(), es.eigenvectors(), r);
}

// Lanczos with full reorthogonalization. The Krylov dimension starts at
// max(2k+20, 40) and doubles (capped at p) until every wanted Ritz pair has
// residual ≤ 1e-8·λ_1. A breakdown is continued with a fresh vector
// orthogonal to the basis, so degenerate spectra are handled.
TopEigen lanczos_top(const Matrix& h, std::size_t r) {
  const Eigen::Index p = h.rows();
  const Eigen::Index want = static_cast<Eigen::Index>(r + 1);
  Eigen::Index krylov = std::min<Eigen::Index>(p, std::max<Eigen::Index>(2 * want + 20, 40));
  CounterRng rng(0x1A2C2050ULL);

  for (int restart = 0; restart < 8; ++restart) {
    Matrix q = Matrix::Zero(p, krylov);
    Vector alpha = Vector::Zero(krylov);
    Vector beta = Vector::Zero(krylov);
    Vector v(p);
    for (Eigen::Index i = 0; i < p; ++i) v[i] = rng.normal();
    q.col(0) = v.normalized();
    Eigen::Index used = krylov;
    for (Eigen::Index j = 0; j < krylov; ++j) {
      Vector w = h * q.col(j);
      alpha[j] = q.col(j).dot(w);
      // Two passes of classical Gram-Schmidt against the whole basis.
      for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
      if (j + 1 == krylov) break;
      double b = w.norm();
      if (b <= 1e-12 * std::max(std::abs(alpha[j]), 1.0)) {
        // Invariant subspace found; restart the recurrence with a new direction.
        bool found = false;
        for (int tries = 0; tries < 5 && !found; ++tries) {
          for (Eigen::Index i = 0; i < p; ++i) w[i] = rng.normal();
          for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).transpose() * w);
          found = w.norm() > 1e-6;
        }
        if (!found) {
          used = j + 1;
          break;
        }
        beta[j] = 0.0;
        q.col(j + 1) = w.normalized();
        continue;
      }
      beta[j] = b;
      q.col(j + 1) = w / b;
    }

    // Rayleigh-Ritz on the (reorthogonalized) basis: T = QᵀHQ.
    const Matrix basis = q.leftCols(used);
    const Matrix t = basis.transpose() * h * basis;
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    if (es.info() != Eigen::Success) throw EigenConvergenceError("top_r_eig: Ritz problem did not converge");
    if (used < want) {
      krylov = std::min<Eigen::Index>(p, 2 * krylov);
      continue;
    }
    const Matrix ritz_vectors = basis * es.eigenvectors();
    TopEigen out = truncate_sorted(es.eigenvalues(), ritz_vectors, r);
    const double lam1 = std::abs(out.values[0]);
    bool ok = true;
    for (Eigen::Index k = 0; k < want && ok; ++k) {
      const Vector u = ritz_vectors.col(used - 1 - k);
      ok = (h * u - out.values[k] * u).norm() <= 1e-8 * std::max(lam1, 1e-300);
    }
    if (ok) return out;
    if (krylov == p) break;
    krylov = std::min<Eigen::Index>(p, 2 * krylov);
  }
  throw EigenConvergenceError("top_r_eig: Lanczos did not converge");
}

}  // namespace

TopEigen top_r_eig(const Matrix& h, std::size_t r, EigenMethod method) {
  if (h.rows() != h.cols()) throw DimensionError("top_r_eig: matrix must be square");
  if (r + 1 > static_cast<std::size_t>(h.rows())) throw std::invalid_argument("top_r_eig: need r+1 <= p");
  if (method == EigenMethod::automatic) method = h.rows() <= 500 ? EigenMethod::dense : EigenMethod::lanczos;
  return method == EigenMethod::dense ? dense_top(h, r) : lanczos_top(h, r);
}

}  // namespace ssn
