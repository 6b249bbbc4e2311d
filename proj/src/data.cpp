#include "ssn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "ssn/rng.hpp"

namespace ssn {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

SparseMatrix::SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
                           std::vector<std::size_t> col_indices, std::vector<double> values)
    : n_rows_(n_rows),
      n_cols_(n_cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != n_rows_ + 1) throw DimensionError("SparseMatrix: row_offsets must have n_rows+1 entries");
  if (col_indices_.size() != values_.size()) throw DimensionError("SparseMatrix: col_indices/values length mismatch");
  if (row_offsets_.front() != 0 || row_offsets_.back() != values_.size())
    throw std::invalid_argument("SparseMatrix: row_offsets must span [0, nnz]");
  for (std::size_t i = 0; i < n_rows_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) throw std::invalid_argument("SparseMatrix: row_offsets decreasing");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (col_indices_[k] >= n_cols_) throw DimensionError("SparseMatrix: column index out of range");
      if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
        throw std::invalid_argument("SparseMatrix: column indices must be strictly increasing within a row");
    }
  }
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) {
        cols.push_back(static_cast<std::size_t>(j));
        vals.push_back(dense(i, j));
      }
    }
    offsets.push_back(vals.size());
  }
  return {static_cast<std::size_t>(dense.rows()), static_cast<std::size_t>(dense.cols()), std::move(offsets),
          std::move(cols), std::move(vals)};
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> cols(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) cols[i] = i;
  return {n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0)};
}

double SparseMatrix::row_dot(std::size_t i, const Vector& x) const {
  double acc = 0.0;
  for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
    acc += values_[k] * x[static_cast<Eigen::Index>(col_indices_[k])];
  return acc;
}

double SparseMatrix::row_squared_norm(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) acc += values_[k] * values_[k];
  return acc;
}

Matrix SparseMatrix::to_dense() const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n_rows_), static_cast<Eigen::Index>(n_cols_));
  for (std::size_t i = 0; i < n_rows_; ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_indices_[k])) = values_[k];
  return out;
}

SparseMatrix SparseMatrix::max_abs_scaled() const {
  std::vector<double> col_max(n_cols_, 0.0);
  for (std::size_t k = 0; k < values_.size(); ++k)
    col_max[col_indices_[k]] = std::max(col_max[col_indices_[k]], std::abs(values_[k]));
  std::vector<double> vals = values_;
  for (std::size_t k = 0; k < vals.size(); ++k)
    if (col_max[col_indices_[k]] > 0.0) vals[k] /= col_max[col_indices_[k]];
  return {n_rows_, n_cols_, row_offsets_, col_indices_, std::move(vals)};
}

Vector spmv(const SparseMatrix& a, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != a.n_cols()) throw DimensionError("spmv: x length != n_cols");
  Vector y(static_cast<Eigen::Index>(a.n_rows()));
  for (std::size_t i = 0; i < a.n_rows(); ++i) y[static_cast<Eigen::Index>(i)] = a.row_dot(i, x);
  return y;
}

Vector spmv_t(const SparseMatrix& a, const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != a.n_rows()) throw DimensionError("spmv_t: y length != n_rows");
  Vector x = Vector::Zero(static_cast<Eigen::Index>(a.n_cols()));
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    const double yi = y[static_cast<Eigen::Index>(i)];
    if (yi == 0.0) continue;
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) x[static_cast<Eigen::Index>(cols[k])] += vals[k] * yi;
  }
  return x;
}

Dataset::Dataset(SparseMatrix features, std::vector<double> labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (labels_.size() != features_.n_rows()) throw DimensionError("Dataset: labels length != number of rows");
  for (double b : labels_)
    if (b != 1.0 && b != -1.0) throw std::invalid_argument("Dataset: labels must be exactly -1 or +1");
}

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, std::size_t& out) {
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) toks.push_back(line.substr(start, i - start));
  }
  return toks;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts, LibsvmStats* stats) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<double> labels;
  std::size_t max_index = 0;  // 1-based max seen
  std::size_t relabeled = 0;
  std::size_t line_no = 0;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto toks = split_ws(view);
    if (toks.empty()) continue;

    double label = 0.0;
    if (!parse_double(toks[0], label)) throw ParseError(line_no, "invalid label '" + std::string(toks[0]) + "'");
    if (label != 1.0 && label != -1.0) {
      ++relabeled;
      label = label > 0.0 ? 1.0 : -1.0;
    }

    std::size_t prev = 0;
    for (std::size_t t = 1; t < toks.size(); ++t) {
      const auto colon = toks[t].find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "expected index:value, got '" + std::string(toks[t]) + "'");
      std::size_t idx = 0;
      double v = 0.0;
      if (!parse_index(toks[t].substr(0, colon), idx) || idx == 0)
        throw ParseError(line_no, "invalid feature index in '" + std::string(toks[t]) + "'");
      if (!parse_double(toks[t].substr(colon + 1), v))
        throw ParseError(line_no, "invalid feature value in '" + std::string(toks[t]) + "'");
      if (idx <= prev) throw ParseError(line_no, "feature indices must be strictly increasing");
      if (opts.expected_dim && idx > *opts.expected_dim)
        throw DimensionError("line " + std::to_string(line_no) + ": feature index " + std::to_string(idx) +
                             " exceeds dimension " + std::to_string(*opts.expected_dim));
      prev = idx;
      max_index = std::max(max_index, idx);
      cols.push_back(idx - 1);
      vals.push_back(v);
    }
    offsets.push_back(vals.size());
    labels.push_back(label);
  }

  if (labels.empty() && opts.strict && !opts.expected_dim)
    throw ParseError(line_no, "empty input and no expected dimension");

  if (stats) {
    stats->lines = line_no;
    stats->relabeled = relabeled;
  }
  const std::size_t n_cols = opts.expected_dim.value_or(max_index);
  const std::size_t n_rows = labels.size();
  return {SparseMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals)), std::move(labels)};
}

Dataset parse_libsvm_string(const std::string& text, const LibsvmOptions& opts, LibsvmStats* stats) {
  std::istringstream in(text);
  return parse_libsvm(in, opts, stats);
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts, LibsvmStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open dataset '" + path + "'");
  return parse_libsvm(in, opts, stats);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  const auto& a = data.features();
  char buf[64];
  for (std::size_t i = 0; i < a.n_rows(); ++i) {
    out << (data.labels()[i] > 0 ? "+1" : "-1");
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::snprintf(buf, sizeof buf, " %zu:%.17g", cols[k] + 1, vals[k]);
      out << buf;
    }
    out << '\n';
  }
}

std::string to_libsvm_string(const Dataset& data) {
  std::ostringstream out;
  write_libsvm(out, data);
  return out.str();
}

Dataset synth_logistic(std::size_t n, std::size_t p, double condition_target, std::uint64_t seed) {
  if (p < 1 || n < p) throw std::invalid_argument("synth_logistic: need n >= p >= 1");
  if (!(condition_target >= 1.0)) throw std::invalid_argument("synth_logistic: condition_target must be >= 1");

  CounterRng rng(seed);
  CounterRng design_rng = rng.split(0);
  CounterRng weight_rng = rng.split(1);
  CounterRng label_rng = rng.split(2);

  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);
  Matrix gauss(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) gauss(i, j) = design_rng.normal();

  // Orthonormal columns of a Gaussian matrix, rescaled so column j has norm
  // sqrt(n) * cond^(-j/(p-1)). Singular values are exactly those norms.
  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double frac = p > 1 ? static_cast<double>(j) / static_cast<double>(p - 1) : 0.0;
    q.col(j) *= root_n * std::pow(condition_target, -frac);
  }

  Vector w(cols);
  for (Eigen::Index j = 0; j < cols; ++j) w[j] = weight_rng.normal() / std::sqrt(static_cast<double>(p));
  // Spread the planted signal across all scales so labels are informative.
  w *= 2.0;

  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = q.row(static_cast<Eigen::Index>(i)).dot(w);
    const double prob = 1.0 / (1.0 + std::exp(-z));
    labels[i] = label_rng.uniform() < prob ? 1.0 : -1.0;
  }
  return {SparseMatrix::from_dense(q), std::move(labels)};
}

}  // namespace ssn
