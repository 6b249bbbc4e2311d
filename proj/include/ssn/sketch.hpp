#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssn/data.hpp"

namespace ssn {

enum class SketchKind { gaussian, uniform_rows, leverage_rows, sparse_embed };

std::string to_string(SketchKind kind);
std::optional<SketchKind> sketch_kind_from_string(const std::string& name);

struct SketchSpec {
  SketchKind kind = SketchKind::gaussian;
  std::size_t target_dim = 1;
  std::uint64_t seed = 0;
  // Leverage mixing weight; only read for leverage_rows.
  double beta = 1.0;
};

class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Counts work done by apply(); used to check the one-pass property of the
// sparse embedding.
struct SketchApplyStats {
  std::size_t entries_touched = 0;
};

// A concrete draw of S ∈ ℝ^{s×m}. Immutable.
class RealizedSketch {
 public:
  struct SampledRow {
    std::size_t row;
    double scale;  // 1/√(p_row · s)
  };

  const SketchSpec& spec() const { return spec_; }
  SketchKind kind() const { return spec_.kind; }
  std::size_t target_dim() const { return spec_.target_dim; }
  std::size_t source_rows() const { return source_rows_; }

  // gaussian only: s×m, entries N(0, 1/s).
  const Matrix& dense() const { return dense_; }
  // uniform_rows / leverage_rows only.
  const std::vector<SampledRow>& sampled_rows() const { return sampled_; }
  // sampling kinds: the distribution rows were drawn from.
  const std::vector<double>& probabilities() const { return probs_; }
  // sparse_embed only: column j of S has its single nonzero sign(j) at bucket(j).
  const std::vector<std::size_t>& buckets() const { return buckets_; }
  const std::vector<int>& signs() const { return signs_; }

  // S·B for B with source_rows() rows.
  Matrix apply(const Matrix& b, SketchApplyStats* stats = nullptr) const;
  // Dense S (mainly for tests).
  Matrix to_dense() const;

  friend RealizedSketch realize(const SketchSpec& spec, std::size_t m);
  friend RealizedSketch realize_with_scores(const SketchSpec& spec, std::span<const double> leverage);
  friend RealizedSketch identity_sketch(std::size_t m);

 private:
  RealizedSketch(SketchSpec spec, std::size_t m) : spec_(spec), source_rows_(m) {}

  SketchSpec spec_;
  std::size_t source_rows_;
  Matrix dense_;
  std::vector<SampledRow> sampled_;
  std::vector<double> probs_;
  std::vector<std::size_t> buckets_;
  std::vector<int> signs_;
};

// Draws the sketch. Deterministic in (spec, m). leverage_rows needs scores
// and is rejected here; use realize_with_scores.
RealizedSketch realize(const SketchSpec& spec, std::size_t m);
// leverage_rows with p_i = β·ℓ_i + (1−β)/m; other kinds ignore the scores.
RealizedSketch realize_with_scores(const SketchSpec& spec, std::span<const double> leverage);
// uniform_rows with s = m that takes every row exactly once (S = I).
RealizedSketch identity_sketch(std::size_t m);

// ℓ_i = ‖U_i‖²/d from a thin orthogonal basis U of B. Σℓ = 1.
std::vector<double> leverage_scores(const Matrix& b);
std::vector<double> leverage_scores(const SparseMatrix& b);
// μ(B) = m · max_i ℓ_i ∈ [1, m/d].
double coherence(const Matrix& b);
double coherence(const SparseMatrix& b);

// Sample-size and sketch-size rules. All round up.
// ⌈16K² log(2p/δ) / (σ²ε²)⌉
std::size_t sample_size_subnewton(double k, double sigma, double p, double delta, double epsilon);
// ⌈c·μ·p·log(p/δ) / ε²⌉
std::size_t sample_size_coherent(double mu, double p, double delta, double epsilon, double c = 16.0);
// ⌈G² / ε₀²⌉, enough for ‖g − ∇F‖ ≤ ε₀‖∇F‖ with G = max_i‖∇f_i‖.
std::size_t sample_size_gradient(double max_term_grad, double eps0);
// Target dimension for an ε-embedding of a d-column matrix:
// gaussian c·d/ε², sampling c·d·log(d)/ε², sparse_embed c·d²/ε².
std::size_t embedding_dim(SketchKind kind, std::size_t d, double epsilon, double c);

// ⌈v⌉ that ignores relative rounding noise below 1e-12 (so that a formula
// evaluating to 16 + 1ulp still yields 16).
std::size_t ceil_count(double v);

}  // namespace ssn
