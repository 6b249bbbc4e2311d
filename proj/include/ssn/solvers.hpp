#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssn/data.hpp"
#include "ssn/linalg.hpp"
#include "ssn/objectives.hpp"
#include "ssn/rng.hpp"
#include "ssn/sketch.hpp"
#include "ssn/trace.hpp"

namespace ssn {

enum class Strategy {
  exact_newton,
  sub_newton,        // sub-sampled Hessian, direct solve
  sketch_newton,     // sketched Hessian, direct solve
  re_sub_newton,     // sub-sampled Hessian + iterative refinement
  re_sketch_newton,  // sketched Hessian + iterative refinement
  pcg_newton,        // CG on ∇²F preconditioned by the sampled/sketched Hessian
  newsamp,           // rank-r spectrum truncation of the sub-sampled Hessian
  reg_sub_newton,    // sub-sampled Hessian + αI
  sub_hess_grad,     // sub-sampled Hessian and sub-sampled gradient
  sncg,              // CG on the sub-sampled Hessian to ε₀‖∇F‖
};

std::string to_string(Strategy s);
std::optional<Strategy> strategy_from_string(const std::string& name);

// Forcing tolerance for the inner solve as a function of ‖∇F(x_t)‖.
struct TolSchedule {
  enum class Kind { constant, paper, quadratic };
  Kind kind = Kind::paper;
  double c = 0.1;

  // tol = c
  static TolSchedule constant(double tau) { return {Kind::constant, tau}; }
  // tol = min(c, √‖g‖)·‖g‖
  static TolSchedule paper(double c = 0.1) { return {Kind::paper, c}; }
  // tol = c·‖g‖²
  static TolSchedule quadratic(double c = 1.0) { return {Kind::quadratic, c}; }

  double operator()(double grad_norm) const;
};

// Absolute count, or a fraction of n.
struct SampleSize {
  double value = 0.05;
  bool fraction = true;

  static SampleSize count(std::size_t k) { return {static_cast<double>(k), false}; }
  static SampleSize of_n(double frac) { return {frac, true}; }
  std::size_t resolve(std::size_t n) const;
};

enum class Sampling {
  uniform,     // i.i.d. uniform draws with replacement, fresh stream per t
  exhaustive,  // every index exactly once (|S| = n); S = I for sketches
};

enum class GammaMode { automatic, on, off };

struct SolverConfig {
  Strategy strategy = Strategy::re_sub_newton;

  SampleSize sample;
  Sampling sampling = Sampling::uniform;

  // Sketch strategies, and pcg_newton when pcg_sketch is set.
  SketchKind sketch_kind = SketchKind::gaussian;
  std::optional<std::size_t> sketch_dim;  // default: embedding_dim(kind, p, ε_eff, sketch_const)
  // Default 1 for sparse_embed, 4 for the other kinds.
  std::optional<double> sketch_const;
  double sketch_beta = 1.0;
  // ε_eff = ε·σ̂/K̂ instead of ε (the accuracy demanded of an unrefined sketch).
  bool sketch_scaled_accuracy = false;
  bool pcg_sketch = false;

  double epsilon = 0.5;
  TolSchedule tol;
  // Default: ⌈log(K̂‖g‖/(σ̂·tol))/log(1/ε)⌉ + 5, capped at 200.
  std::optional<std::size_t> inner_max;

  double cg_eps0 = 0.05;
  SampleSize grad_sample{0.5, true};
  std::size_t newsamp_rank = 1;
  double newsamp_eta = 1.0;
  double reg_alpha = 0.0;

  double gtol = 1e-10;
  std::size_t max_outer = 100;
  std::uint64_t seed = 0;

  // Refined strategies take their first warmup_iters steps with sncg.
  std::size_t warmup_iters = 0;
  // Permit σ̂ = 0 objectives.
  bool allow_singular = false;
  // Backtracking on f; off by default, all analysis assumes unit steps.
  bool damping = false;
  GammaMode gamma = GammaMode::automatic;

  // Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

class RefinementDivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CgStagnationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a direction builder sees at outer iteration t.
struct DirectionContext {
  const Objective& obj;
  const Vector& x;
  const Vector& grad;
  const SolverConfig& cfg;
  // Stream for iteration t; builders split it further by purpose.
  CounterRng stream;
};

struct Direction {
  Vector step;
  std::size_t inner_iters = 0;
  // Residual of the inner solve as tracked by the method itself.
  double inner_residual = 0.0;
  bool inner_converged = true;
  std::optional<double> tol;
  // Hessian surrogate H behind the step, when one was formed.
  std::optional<Matrix> surrogate;
};

// Purpose-specific child streams of an iteration stream.
namespace streams {
inline constexpr std::uint64_t hessian_sample = 1;
inline constexpr std::uint64_t gradient_sample = 2;
inline constexpr std::uint64_t sketch = 3;
inline constexpr std::uint64_t resample = 4;
inline constexpr std::uint64_t gamma = 5;
}  // namespace streams

// Sample multiset per cfg.sampling drawn from `stream`.
IndexList draw_sample(std::size_t n, std::size_t size, Sampling sampling, CounterRng stream);

// H = (1/|S|) Σ ∇²f_j + λI on the iteration's Hessian stream.
Matrix sampled_hessian(const DirectionContext& ctx, std::uint64_t purpose = streams::hessian_sample);
// H = (SB)ᵀ(SB) + λI with a fresh sketch on the iteration's sketch stream.
Matrix sketched_hessian(const DirectionContext& ctx, std::uint64_t purpose = streams::sketch);
std::size_t sketch_target_dim(const Objective& obj, const SolverConfig& cfg);

struct RefineResult {
  Vector direction;
  double residual_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Iterative refinement of p = H⁻¹g toward ∇²F(x)·p = g:
//   r ← ∇²F·p − g,  p ← p − H⁻¹r   until ‖r‖ ≤ tol or inner_max steps.
// Three consecutive residual increases raise RefinementDivergenceError.
RefineResult refine_loop(const Objective& obj, const Vector& x, const Vector& grad, const SpdFactor& h, double tol,
                         std::size_t inner_max);

// ⌈log(K̂‖g‖/(σ̂·tol)) / log(1/ε)⌉, zero when the argument of the log is ≤ 1.
std::size_t refine_iteration_bound(double k_hat, double sigma_hat, double grad_norm, double tol, double epsilon);
std::size_t default_inner_max(const Objective& obj, const SolverConfig& cfg, double grad_norm, double tol);

// NewSamp surrogate (1/η)(U_r(Λ_r − λ_{r+1}I)U_rᵀ + λ_{r+1}I) and its inverse
// applied through the Woodbury form η(I/λ_{r+1} + U_r(Λ_r⁻¹ − I/λ_{r+1})U_rᵀ).
Matrix newsamp_matrix(const TopEigen& eig, std::size_t p, double eta);
Vector newsamp_solve(const TopEigen& eig, double eta, const Vector& g);

Direction dir_exact_newton(const DirectionContext& ctx);
Direction dir_sub_newton(const DirectionContext& ctx);
Direction dir_sketch_newton(const DirectionContext& ctx);
Direction dir_re_sub_newton(const DirectionContext& ctx);
Direction dir_re_sketch_newton(const DirectionContext& ctx);
Direction dir_pcg_newton(const DirectionContext& ctx);
Direction dir_newsamp(const DirectionContext& ctx);
Direction dir_reg_sub_newton(const DirectionContext& ctx);
Direction dir_sncg(const DirectionContext& ctx);
Direction dir_sub_hess_grad(const DirectionContext& ctx);

// Dispatch on cfg.strategy (including warm-up).
Direction compute_direction(const DirectionContext& ctx, std::size_t t);

enum class Termination { gtol_reached, max_outer, numerical_failure };
std::string to_string(Termination t);

struct RunResult {
  Vector x;
  std::vector<IterationRecord> records;
  Termination termination = Termination::max_outer;
  std::string failure;  // message when termination == numerical_failure
};

// Seconds since the start of the run; injectable for reproducible traces.
using RunClock = std::function<double()>;

// x_{t+1} = x_t − p_t with unit steps until ‖∇F‖ ≤ gtol or max_outer.
// One record per outer iteration plus the terminal row.
RunResult newton_drive(const Objective& obj, const SolverConfig& cfg, std::optional<Vector> x0 = std::nullopt,
                       RunClock clock = {});

}  // namespace ssn
