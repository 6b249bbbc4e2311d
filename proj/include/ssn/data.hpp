#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ssn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexList = std::vector<std::size_t>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Compressed sparse row matrix. Immutable once constructed; the constructor
// validates the CSR invariants (monotone offsets, strictly increasing column
// indices per row, indices in range).
class SparseMatrix {
 public:
  SparseMatrix() : row_offsets_{0} {}
  SparseMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
               std::vector<std::size_t> col_indices, std::vector<double> values);

  static SparseMatrix from_dense(const Matrix& dense);
  static SparseMatrix identity(std::size_t n);

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }

  double row_dot(std::size_t i, const Vector& x) const;
  double row_squared_norm(std::size_t i) const;

  Matrix to_dense() const;
  // Copy with every column divided by its largest absolute entry (zero
  // columns untouched).
  SparseMatrix max_abs_scaled() const;

  bool operator==(const SparseMatrix&) const = default;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
};

// A · x
Vector spmv(const SparseMatrix& a, const Vector& x);
// Aᵀ · y
Vector spmv_t(const SparseMatrix& a, const Vector& y);

// Features plus ±1 labels.
class Dataset {
 public:
  Dataset() = default;
  Dataset(SparseMatrix features, std::vector<double> labels);

  const SparseMatrix& features() const { return features_; }
  const std::vector<double>& labels() const { return labels_; }
  std::size_t n_samples() const { return features_.n_rows(); }
  std::size_t n_features() const { return features_.n_cols(); }

  bool operator==(const Dataset&) const = default;

 private:
  SparseMatrix features_;
  std::vector<double> labels_;
};

struct LibsvmOptions {
  // Forces the column count; an index beyond it is a DimensionError.
  std::optional<std::size_t> expected_dim;
  // In strict mode an empty input without expected_dim is rejected.
  bool strict = false;
};

struct LibsvmStats {
  std::size_t lines = 0;
  // Labels that were not exactly -1 or +1 and got mapped by sign.
  std::size_t relabeled = 0;
};

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {}, LibsvmStats* stats = nullptr);
Dataset parse_libsvm_string(const std::string& text, const LibsvmOptions& opts = {},
                            LibsvmStats* stats = nullptr);
Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {}, LibsvmStats* stats = nullptr);

// Writes "label i:v ..." lines, 1-based indices, 17 significant digits.
void write_libsvm(std::ostream& out, const Dataset& data);
std::string to_libsvm_string(const Dataset& data);

// Synthetic logistic-regression problem. The design has orthogonal columns
// whose norms are geometrically spaced, so the singular-value ratio of the
// feature matrix equals condition_target. Labels come from a planted weight
// vector through the logistic model. Pure function of its arguments.
Dataset synth_logistic(std::size_t n, std::size_t p, double condition_target, std::uint64_t seed);

}  // namespace ssn
