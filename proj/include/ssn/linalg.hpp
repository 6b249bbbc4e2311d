#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>

#include "ssn/data.hpp"

namespace ssn {

// Raised when a matrix or operator that must be positive definite is not.
class NotSpdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NegativeCurvatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EigenConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cholesky factor L with L·Lᵀ = H + jitter·I.
class SpdFactor {
 public:
  std::size_t dim() const { return static_cast<std::size_t>(lower_.rows()); }
  const Matrix& lower() const { return lower_; }
  double jitter_applied() const { return jitter_; }

  // H⁻¹b by forward and back substitution.
  Vector solve(const Vector& b) const;
  Matrix reconstruct() const;

  friend SpdFactor spd_factor(const Matrix& h);

 private:
  Matrix lower_;
  double jitter_ = 0.0;
};

// Cholesky of a symmetric matrix. A nonpositive pivot triggers a retry with
// jitter 1e-12·trace(H)/p, escalated ×10 up to three more times; after that
// NotSpdError.
SpdFactor spd_factor(const Matrix& h);
Vector spd_solve(const SpdFactor& f, const Vector& b);

using LinearOperator = std::function<Vector(const Vector&)>;

struct PcgResult {
  Vector solution;
  double residual_norm = 0.0;  // true residual ‖b − A·solution‖
  std::size_t iterations = 0;  // operator applications
  bool converged = false;
};

// Preconditioned conjugate gradient for A·z = b, starting from z = 0 and
// stopping once ‖r‖ ≤ tol_abs or after max_iter steps. precond_solve applies
// M⁻¹ for an SPD preconditioner M.
PcgResult pcg(const LinearOperator& apply_a, const Vector& b, const LinearOperator& precond_solve, double tol_abs,
              std::size_t max_iter);

struct TopEigen {
  Vector values;   // λ_1 ≥ … ≥ λ_{r+1}
  Matrix vectors;  // p×r, orthonormal columns for λ_1..λ_r
};

enum class EigenMethod { automatic, dense, lanczos };

// Leading r+1 eigenvalues of a symmetric PSD matrix and the leading r
// eigenvectors. automatic: dense symmetric QR for p ≤ 500, Lanczos with full
// reorthogonalization above.
TopEigen top_r_eig(const Matrix& h, std::size_t r, EigenMethod method = EigenMethod::automatic);

}  // namespace ssn
