#include "ssn/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssn/rng.hpp"

namespace ssn {

std::string to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::uniform_rows: return "uniform";
    case SketchKind::leverage_rows: return "leverage";
    case SketchKind::sparse_embed: return "sparse";
  }
  return "unknown";
}

std::optional<SketchKind> sketch_kind_from_string(const std::string& name) {
  if (name == "gaussian") return SketchKind::gaussian;
  if (name == "uniform" || name == "uniform_rows") return SketchKind::uniform_rows;
  if (name == "leverage" || name == "leverage_rows") return SketchKind::leverage_rows;
  if (name == "sparse" || name == "sparse_embed" || name == "countsketch") return SketchKind::sparse_embed;
  return std::nullopt;
}

namespace {

// Row draws by inverse CDF, s draws with replacement.
std::vector<RealizedSketch::SampledRow> draw_rows(const std::vector<double>& probs, std::size_t s, CounterRng& rng) {
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  const double total = cdf.back();
  std::vector<RealizedSketch::SampledRow> rows;
  rows.reserve(s);
  for (std::size_t j = 0; j < s; ++j) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = it == cdf.end() ? probs.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
    while (probs[i] <= 0.0 && i + 1 < probs.size()) ++i;
    rows.push_back({i, 1.0 / std::sqrt(probs[i] * static_cast<double>(s))});
  }
  return rows;
}

}  // namespace

RealizedSketch realize(const SketchSpec& spec, std::size_t m) {
  if (spec.kind == SketchKind::leverage_rows)
    throw std::invalid_argument("realize: leverage_rows needs leverage scores, use realize_with_scores");
  if (spec.target_dim < 1) throw std::invalid_argument("sketch: target_dim must be >= 1");
  if (m < 1) throw std::invalid_argument("sketch: source must have at least one row");

  RealizedSketch sk(spec, m);
  CounterRng rng(spec.seed);
  const std::size_t s = spec.target_dim;
  switch (spec.kind) {
    case SketchKind::gaussian: {
      const double scale = 1.0 / std::sqrt(static_cast<double>(s));
      sk.dense_.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m));
      for (Eigen::Index j = 0; j < sk.dense_.cols(); ++j)
        for (Eigen::Index i = 0; i < sk.dense_.rows(); ++i) sk.dense_(i, j) = scale * rng.normal();
      break;
    }
    case SketchKind::uniform_rows:
      sk.probs_.assign(m, 1.0 / static_cast<double>(m));
      sk.sampled_ = draw_rows(sk.probs_, s, rng);
      break;
    case SketchKind::sparse_embed:
      sk.buckets_.resize(m);
      sk.signs_.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        sk.buckets_[j] = rng.uniform_index(s);
        sk.signs_[j] = rng.sign();
      }
      break;
    case SketchKind::leverage_rows:
      break;
  }
  return sk;
}

RealizedSketch realize_with_scores(const SketchSpec& spec, std::span<const double> leverage) {
  if (spec.kind != SketchKind::leverage_rows) return realize(spec, leverage.size());
  const std::size_t m = leverage.size();
  if (spec.target_dim < 1) throw std::invalid_argument("sketch: target_dim must be >= 1");
  if (m < 1) throw std::invalid_argument("sketch: source must have at least one row");
  if (!(spec.beta > 0.0 && spec.beta <= 1.0)) throw std::invalid_argument("sketch: beta must lie in (0, 1]");

  RealizedSketch sk(spec, m);
  const double total = std::accumulate(leverage.begin(), leverage.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("realize_with_scores: leverage scores must have positive sum");
  sk.probs_.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    sk.probs_[i] = spec.beta * leverage[i] / total + (1.0 - spec.beta) / static_cast<double>(m);
  CounterRng rng(spec.seed);
  sk.sampled_ = draw_rows(sk.probs_, spec.target_dim, rng);
  return sk;
}

RealizedSketch identity_sketch(std::size_t m) {
  if (m < 1) throw std::invalid_argument("sketch: source must have at least one row");
  RealizedSketch sk(SketchSpec{SketchKind::uniform_rows, m, 0, 1.0}, m);
  sk.probs_.assign(m, 1.0 / static_cast<double>(m));
  sk.sampled_.reserve(m);
  for (std::size_t i = 0; i < m; ++i) sk.sampled_.push_back({i, 1.0});
  return sk;
}

Matrix RealizedSketch::apply(const Matrix& b, SketchApplyStats* stats) const {
  if (static_cast<std::size_t>(b.rows()) != source_rows_) throw DimensionError("sketch apply: B has wrong row count");
  const auto s = static_cast<Eigen::Index>(spec_.target_dim);
  Matrix out;
  std::size_t touched = 0;
  switch (spec_.kind) {
    case SketchKind::gaussian:
      out = dense_ * b;
      touched = static_cast<std::size_t>(b.size());
      break;
    case SketchKind::uniform_rows:
    case SketchKind::leverage_rows:
      out.resize(static_cast<Eigen::Index>(sampled_.size()), b.cols());
      for (std::size_t j = 0; j < sampled_.size(); ++j) {
        out.row(static_cast<Eigen::Index>(j)) = sampled_[j].scale * b.row(static_cast<Eigen::Index>(sampled_[j].row));
        touched += static_cast<std::size_t>(b.cols());
      }
      break;
    case SketchKind::sparse_embed:
      out = Matrix::Zero(s, b.cols());
      // Column-major sweep: each stored entry of B is read once.
      for (Eigen::Index c = 0; c < b.cols(); ++c)
        for (Eigen::Index r = 0; r < b.rows(); ++r) {
          const double v = b(r, c);
          if (v == 0.0) continue;
          const auto ru = static_cast<std::size_t>(r);
          out(static_cast<Eigen::Index>(buckets_[ru]), c) += signs_[ru] * v;
          ++touched;
        }
      break;
  }
  if (stats) stats->entries_touched += touched;
  return out;
}

Matrix RealizedSketch::to_dense() const {
  return apply(Matrix::Identity(static_cast<Eigen::Index>(source_rows_), static_cast<Eigen::Index>(source_rows_)));
}

std::vector<double> leverage_scores(const Matrix& b) {
  const auto m = b.rows();
  const auto d = b.cols();
  if (d < 1 || m < d) throw RankError("leverage_scores: need m >= d >= 1");
  Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv[d - 1] >= 1e-10 * sv[0]) || sv[0] == 0.0)
    throw RankError("leverage_scores: matrix is rank deficient");
  const Matrix& u = svd.matrixU();
  std::vector<double> scores(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) scores[static_cast<std::size_t>(i)] = u.row(i).squaredNorm() / static_cast<double>(d);
  return scores;
}

std::vector<double> leverage_scores(const SparseMatrix& b) { return leverage_scores(b.to_dense()); }

double coherence(const Matrix& b) {
  const auto scores = leverage_scores(b);
  return static_cast<double>(b.rows()) * *std::max_element(scores.begin(), scores.end());
}

double coherence(const SparseMatrix& b) { return coherence(b.to_dense()); }

std::size_t ceil_count(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::domain_error("ceil_count: value must be finite and >= 0");
  return static_cast<std::size_t>(std::ceil(v * (1.0 - 1e-12)));
}

namespace {
void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}
}  // namespace

std::size_t sample_size_subnewton(double k, double sigma, double p, double delta, double epsilon) {
  require_positive(k, "K");
  require_positive(sigma, "sigma");
  require_positive(p, "p");
  require_positive(delta, "delta");
  require_positive(epsilon, "epsilon");
  return ceil_count(16.0 * k * k * std::log(2.0 * p / delta) / (sigma * sigma * epsilon * epsilon));
}

std::size_t sample_size_coherent(double mu, double p, double delta, double epsilon, double c) {
  require_positive(mu, "mu");
  require_positive(p, "p");
  require_positive(delta, "delta");
  require_positive(epsilon, "epsilon");
  require_positive(c, "c");
  return ceil_count(c * mu * p * std::log(p / delta) / (epsilon * epsilon));
}

std::size_t sample_size_gradient(double max_term_grad, double eps0) {
  require_positive(eps0, "eps0");
  return std::max<std::size_t>(1, ceil_count(max_term_grad * max_term_grad / (eps0 * eps0)));
}

std::size_t embedding_dim(SketchKind kind, std::size_t d, double epsilon, double c) {
  require_positive(epsilon, "epsilon");
  require_positive(c, "c");
  const double dd = static_cast<double>(d);
  const double e2 = epsilon * epsilon;
  double s = 0.0;
  switch (kind) {
    case SketchKind::gaussian: s = c * dd / e2; break;
    case SketchKind::uniform_rows:
    case SketchKind::leverage_rows: s = c * dd * std::max(std::log(dd), 1.0) / e2; break;
    case SketchKind::sparse_embed: s = c * dd * dd / e2; break;
  }
  return std::max<std::size_t>(1, ceil_count(s));
}

}  // namespace ssn
