#include "ssn/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssn {

namespace {

// Per-term curvature weights are floored before the square root so that
// rows of B(x) never collapse to signed zeros on separable data.
constexpr double kWeightFloor = 1e-300;

void add_scaled_outer(Matrix& h, const SparseMatrix& a, std::size_t row, double scale) {
  const auto cols = a.row_cols(row);
  const auto vals = a.row_values(row);
  for (std::size_t u = 0; u < cols.size(); ++u) {
    const double su = scale * vals[u];
    for (std::size_t v = 0; v < cols.size(); ++v)
      h(static_cast<Eigen::Index>(cols[u]), static_cast<Eigen::Index>(cols[v])) += su * vals[v];
  }
}

}  // namespace

double log1p_exp_neg(double z) {
  return std::max(0.0, -z) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

IndexList Objective::all_terms() const {
  IndexList rows(n_terms());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

LinearModelObjective::LinearModelObjective(SparseMatrix design, double lambda, Vector linear)
    : design_(std::move(design)), lambda_(lambda), linear_(std::move(linear)) {
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw std::invalid_argument("objective: lambda must be finite and >= 0");
  if (linear_.size() == 0) linear_ = Vector::Zero(static_cast<Eigen::Index>(design_.n_cols()));
  if (static_cast<std::size_t>(linear_.size()) != design_.n_cols())
    throw DimensionError("objective: linear term length != dimension");
}

void LinearModelObjective::check_point(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw DimensionError("objective: point has wrong dimension");
  if (!x.allFinite()) throw std::domain_error("objective: point has non-finite entries");
}

void LinearModelObjective::check_rows(std::span<const std::size_t> rows) const {
  for (std::size_t r : rows)
    if (r >= n_terms()) throw std::out_of_range("objective: term index out of range");
}

double LinearModelObjective::value(const Vector& x) const {
  check_point(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_terms(); ++i) acc += loss(i, design_.row_dot(i, x));
  const double n = static_cast<double>(std::max<std::size_t>(n_terms(), 1));
  return acc / n + 0.5 * lambda_ * x.squaredNorm() - linear_.dot(x);
}

Vector LinearModelObjective::gradient(const Vector& x) const {
  check_point(x);
  Vector s(static_cast<Eigen::Index>(n_terms()));
  for (std::size_t i = 0; i < n_terms(); ++i)
    s[static_cast<Eigen::Index>(i)] = slope(i, design_.row_dot(i, x));
  Vector g = spmv_t(design_, s);
  if (n_terms() > 0) g /= static_cast<double>(n_terms());
  return g + lambda_ * x - linear_;
}

Vector LinearModelObjective::curvature_weights(const Vector& x) const {
  Vector w(static_cast<Eigen::Index>(n_terms()));
  for (std::size_t i = 0; i < n_terms(); ++i)
    w[static_cast<Eigen::Index>(i)] = curvature(i, design_.row_dot(i, x));
  return w;
}

Vector LinearModelObjective::hessian_vec(const Vector& x, const Vector& v) const {
  check_point(x);
  if (v.size() != x.size()) throw DimensionError("hessian_vec: direction has wrong dimension");
  Vector av = spmv(design_, v);
  av.array() *= curvature_weights(x).array();
  Vector hv = spmv_t(design_, av);
  if (n_terms() > 0) hv /= static_cast<double>(n_terms());
  return hv + lambda_ * v;
}

Matrix LinearModelObjective::explicit_hessian(const Vector& x) const {
  check_point(x);
  if (dim() > kExplicitHessianMaxDim) throw std::length_error("explicit_hessian: dimension too large to materialize");
  const auto p = static_cast<Eigen::Index>(dim());
  Matrix h = Matrix::Zero(p, p);
  const double inv_n = n_terms() > 0 ? 1.0 / static_cast<double>(n_terms()) : 0.0;
  for (std::size_t i = 0; i < n_terms(); ++i)
    add_scaled_outer(h, design_, i, inv_n * curvature(i, design_.row_dot(i, x)));
  h.diagonal().array() += lambda_;
  return h;
}

Matrix LinearModelObjective::factor_rows(const Vector& x, std::span<const std::size_t> rows) const {
  check_point(x);
  check_rows(rows);
  Matrix b = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim()));
  const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(n_terms(), 1));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    const double w = std::max(curvature(i, design_.row_dot(i, x)), kWeightFloor);
    const double scale = std::sqrt(w * inv_n);
    const auto cols = design_.row_cols(i);
    const auto vals = design_.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cols[k])) = scale * vals[k];
  }
  return b;
}

Matrix LinearModelObjective::sub_hessian(const Vector& x, std::span<const std::size_t> sample) const {
  check_point(x);
  if (sample.empty()) throw std::invalid_argument("sub_hessian: empty sample");
  check_rows(sample);
  const auto p = static_cast<Eigen::Index>(dim());
  Matrix h = Matrix::Zero(p, p);
  const double inv_s = 1.0 / static_cast<double>(sample.size());
  for (std::size_t j : sample) add_scaled_outer(h, design_, j, inv_s * curvature(j, design_.row_dot(j, x)));
  h.diagonal().array() += lambda_;
  return h;
}

Vector LinearModelObjective::sub_hessian_vec(const Vector& x, std::span<const std::size_t> sample,
                                             const Vector& v) const {
  check_point(x);
  if (sample.empty()) throw std::invalid_argument("sub_hessian_vec: empty sample");
  if (v.size() != x.size()) throw DimensionError("sub_hessian_vec: direction has wrong dimension");
  check_rows(sample);
  Vector out = Vector::Zero(x.size());
  for (std::size_t j : sample) {
    const double coeff = curvature(j, design_.row_dot(j, x)) * design_.row_dot(j, v);
    const auto cols = design_.row_cols(j);
    const auto vals = design_.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) out[static_cast<Eigen::Index>(cols[k])] += coeff * vals[k];
  }
  out /= static_cast<double>(sample.size());
  return out + lambda_ * v;
}

Vector LinearModelObjective::per_term_gradient(const Vector& x, std::span<const std::size_t> sample) const {
  check_point(x);
  if (sample.empty()) throw std::invalid_argument("per_term_gradient: empty sample");
  check_rows(sample);
  Vector g = Vector::Zero(x.size());
  for (std::size_t i : sample) {
    const double s = slope(i, design_.row_dot(i, x));
    const auto cols = design_.row_cols(i);
    const auto vals = design_.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) g[static_cast<Eigen::Index>(cols[k])] += s * vals[k];
  }
  g /= static_cast<double>(sample.size());
  return g + lambda_ * x - linear_;
}

double LinearModelObjective::curvature_bound() const {
  double k = 0.0;
  for (std::size_t i = 0; i < n_terms(); ++i) k = std::max(k, curvature_sup(i) * design_.row_squared_norm(i));
  return k + lambda_;
}

double LinearModelObjective::max_term_gradient_norm(const Vector& x) const {
  check_point(x);
  double best = 0.0;
  const Vector base = lambda_ * x - linear_;
  for (std::size_t i = 0; i < n_terms(); ++i) {
    Vector g = base;
    const double s = slope(i, design_.row_dot(i, x));
    const auto cols = design_.row_cols(i);
    const auto vals = design_.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) g[static_cast<Eigen::Index>(cols[k])] += s * vals[k];
    best = std::max(best, g.norm());
  }
  return best;
}

RidgeLogistic::RidgeLogistic(Dataset data, double lambda)
    : LinearModelObjective(data.features(), lambda, Vector()), labels_(data.labels()) {}

double RidgeLogistic::loss(std::size_t i, double z) const { return log1p_exp_neg(labels_[i] * z); }

double RidgeLogistic::slope(std::size_t i, double z) const {
  const double b = labels_[i];
  return -b * sigmoid(-b * z);
}

double RidgeLogistic::curvature(std::size_t i, double z) const {
  const double s = sigmoid(labels_[i] * z);
  return s * (1.0 - s);
}

QuadraticObjective::QuadraticObjective(const Matrix& rows, double lambda, Vector linear)
    : LinearModelObjective(SparseMatrix::from_dense(rows), lambda, std::move(linear)) {
  Matrix a = rows.transpose() * rows;
  if (rows.rows() > 0) a /= static_cast<double>(rows.rows());
  a.diagonal().array() += lambda;
  floor_ = a.size() > 0 ? Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() : 0.0;
}

QuadraticObjective QuadraticObjective::from_matrix(const Matrix& a, Vector linear) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("QuadraticObjective::from_matrix: matrix not SPD");
  // Rows c_i = √p · (Lᵀ)_i give (1/p) Σ c_i c_iᵀ = L Lᵀ = a.
  Matrix rows = Matrix(llt.matrixU()) * std::sqrt(static_cast<double>(a.rows()));
  return QuadraticObjective(rows, 0.0, std::move(linear));
}

}  // namespace ssn
