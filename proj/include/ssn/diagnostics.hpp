#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssn/data.hpp"
#include "ssn/objectives.hpp"
#include "ssn/trace.hpp"

namespace ssn {

enum class ConvergenceClass { linear, superlinear, quadratic, inconclusive };

std::string to_string(ConvergenceClass c);

class InsufficientDataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Empirical rate analysis of a gradient-norm sequence. ‖∇F(x_t)‖ stands in
// for ‖∇²F(x*)(x_t − x*)‖; the two agree to first order near x*, exactly on
// quadratics.
struct ConvergenceReport {
  std::vector<double> rho;        // ‖g_{t+1}‖/‖g_t‖ over usable pairs
  std::vector<double> quadratic;  // ‖g_{t+1}‖/‖g_t‖² over usable pairs
  ConvergenceClass classification = ConvergenceClass::inconclusive;
  std::size_t window = 0;
};

// Thresholds are heuristics, not theory:
//   quadratic   — tail q_t all ≤ 10·median(tail q) and the last ρ < 1e-2
//   superlinear — tail ρ strictly decreasing and the last ρ < 0.1
//   linear      — tail ρ within ±20% of their median, median < 1
// A norm is usable if it exceeds 100·ε_mach·‖g_0‖; ratios use pairs of
// consecutive usable norms. Needs window+1 usable norms (window ≥ 2).
ConvergenceReport classify(std::span<const double> grad_norms, std::size_t window);
ConvergenceReport classify(std::span<const IterationRecord> records, std::size_t window);

// classify with window = min(4, usable ratios); inconclusive if fewer than
// two ratios are usable. This is what trace summaries report.
ConvergenceReport classify_trace(std::span<const IterationRecord> records);

// γ = ‖(A − H)H⁻¹‖₂ by power iteration on the nonsymmetric product:
// 100 steps from each of two random starts, the larger estimate wins.
double measure_gamma(const Matrix& exact_hessian, const Matrix& surrogate, std::uint64_t seed = 0);
// Same with A = explicit_hessian(x); guarded by kExplicitHessianMaxDim.
double measure_gamma(const Objective& obj, const Vector& x, const Matrix& surrogate, std::uint64_t seed = 0);

// Smallest ε with (1−ε)H ⪯ A ⪯ (1+ε)H, i.e. max |λ(H⁻¹A) − 1|.
double embedding_accuracy(const Matrix& exact_hessian, const Matrix& surrogate);

// ‖∇²F(x)·p − grad‖ through Hessian-vector products.
double residual_check(const Objective& obj, const Vector& x, const Vector& p, const Vector& grad);

}  // namespace ssn
