#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "ssn/data.hpp"

namespace ssn {

// Largest dimension for which a dense p×p Hessian may be materialized.
inline constexpr std::size_t kExplicitHessianMaxDim = 10'000;

// F(x) = (1/n) Σ f_i(x) exposed as a bundle of capabilities. Every method is
// pure given (this, x), so one handle can be shared by concurrent readers.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t n_terms() const = 0;

  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  // ∇²F(x)·v without forming the p×p matrix.
  virtual Vector hessian_vec(const Vector& x, const Vector& v) const = 0;
  virtual Matrix explicit_hessian(const Vector& x) const = 0;

  // Rows of B(x) with B(x)ᵀB(x) + ridge()·I = ∇²F(x), densified.
  virtual Matrix factor_rows(const Vector& x, std::span<const std::size_t> rows) const = 0;
  // (1/|S|) Σ_{j∈S} ∇²f_j(x). The ridge term is added exactly, never sampled.
  virtual Matrix sub_hessian(const Vector& x, std::span<const std::size_t> sample) const = 0;
  // sub_hessian(x, sample)·v without forming the matrix.
  virtual Vector sub_hessian_vec(const Vector& x, std::span<const std::size_t> sample, const Vector& v) const = 0;
  // (1/|S_g|) Σ_{i∈S_g} ∇f_i(x)
  virtual Vector per_term_gradient(const Vector& x, std::span<const std::size_t> sample) const = 0;

  // Weight of the exact λI part of every per-term Hessian.
  virtual double ridge() const = 0;
  // K̂ ≥ max_i sup_x ‖∇²f_i(x)‖.
  virtual double curvature_bound() const = 0;
  // σ̂ ≤ inf_x λ_min(∇²F(x)).
  virtual double strong_convexity_floor() const { return ridge(); }
  // G(x) = max_i ‖∇f_i(x)‖
  virtual double max_term_gradient_norm(const Vector& x) const = 0;

  // Full row set [0, n).
  IndexList all_terms() const;
};

// Objectives of the form
//   F(x) = (1/n) Σ φ_i(a_iᵀx) + (λ/2)‖x‖² − cᵀx
// over a sparse design A. Concrete losses supply φ_i and its derivatives.
class LinearModelObjective : public Objective {
 public:
  std::size_t dim() const override { return design_.n_cols(); }
  std::size_t n_terms() const override { return design_.n_rows(); }

  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  Vector hessian_vec(const Vector& x, const Vector& v) const override;
  Matrix explicit_hessian(const Vector& x) const override;
  Matrix factor_rows(const Vector& x, std::span<const std::size_t> rows) const override;
  Matrix sub_hessian(const Vector& x, std::span<const std::size_t> sample) const override;
  Vector sub_hessian_vec(const Vector& x, std::span<const std::size_t> sample, const Vector& v) const override;
  Vector per_term_gradient(const Vector& x, std::span<const std::size_t> sample) const override;
  double ridge() const override { return lambda_; }
  double curvature_bound() const override;
  double max_term_gradient_norm(const Vector& x) const override;

  const SparseMatrix& design() const { return design_; }
  // φ_i''(a_iᵀx) for every i.
  Vector curvature_weights(const Vector& x) const;

 protected:
  LinearModelObjective(SparseMatrix design, double lambda, Vector linear);

  virtual double loss(std::size_t i, double z) const = 0;
  virtual double slope(std::size_t i, double z) const = 0;
  virtual double curvature(std::size_t i, double z) const = 0;
  // sup_z φ_i''(z)
  virtual double curvature_sup(std::size_t i) const = 0;

 private:
  void check_point(const Vector& x) const;
  void check_rows(std::span<const std::size_t> rows) const;

  SparseMatrix design_;
  double lambda_;
  Vector linear_;
};

// F(x) = (1/n) Σ log(1 + exp(−b_i⟨a_i, x⟩)) + (λ/2)‖x‖²
class RidgeLogistic final : public LinearModelObjective {
 public:
  RidgeLogistic(Dataset data, double lambda);

  const std::vector<double>& labels() const { return labels_; }

 protected:
  double loss(std::size_t i, double z) const override;
  double slope(std::size_t i, double z) const override;
  double curvature(std::size_t i, double z) const override;
  double curvature_sup(std::size_t) const override { return 0.25; }

 private:
  std::vector<double> labels_;
};

// F(x) = (1/n) Σ ½(c_iᵀx)² + (λ/2)‖x‖² − bᵀx, i.e. ½xᵀAx − bᵀx with
// A = (1/n) CᵀC + λI. Newton is exact on it, which makes it the reference
// problem for solver tests.
class QuadraticObjective final : public LinearModelObjective {
 public:
  QuadraticObjective(const Matrix& rows, double lambda, Vector linear);
  // Terms built from a Cholesky factor so that ∇²F = a (requires a SPD).
  static QuadraticObjective from_matrix(const Matrix& a, Vector linear);

  // Exact λ_min(A), computed at construction.
  double strong_convexity_floor() const override { return floor_; }

 protected:
  double loss(std::size_t, double z) const override { return 0.5 * z * z; }
  double slope(std::size_t, double z) const override { return z; }
  double curvature(std::size_t, double) const override { return 1.0; }
  double curvature_sup(std::size_t) const override { return 1.0; }

 private:
  double floor_ = 0.0;
};

// Numerically stable pieces of the logistic loss.
double log1p_exp_neg(double z);  // log(1 + e^{−z})
double sigmoid(double z);        // 1 / (1 + e^{−z})

}  // namespace ssn
