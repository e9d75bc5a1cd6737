#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nucleifuse {

inline constexpr std::size_t kNumClasses = 4;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  // Rows picked in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A contiguous run of columns that came from one descriptor or network.
struct ColumnBlock {
  std::string source_id;
  std::size_t width = 0;

  bool operator==(const ColumnBlock&) const = default;
};

// Samples x features, with per-column-block provenance.
struct FeatureMatrix {
  Matrix values;
  std::vector<ColumnBlock> blocks;

  FeatureMatrix() = default;
  FeatureMatrix(Matrix m, std::string source_id)
      : values(std::move(m)), blocks{{std::move(source_id), values.cols()}} {}
  FeatureMatrix(Matrix m, std::vector<ColumnBlock> b) : values(std::move(m)), blocks(std::move(b)) {}

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
  // Single source id, or the block ids joined with '+'.
  std::string source_id() const;
};

// Per-sample class scores, n x 4.
struct ProbabilityMatrix {
  Matrix values;
  std::string source_id;

  std::size_t rows() const noexcept { return values.rows(); }
};

using Labels = std::vector<int>;

// Throws InputError unless every label is in 0..3.
void validate_labels(std::span<const int> labels);

// Throws InputError when any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);

Labels select(std::span<const int> labels, std::span<const std::size_t> indices);

}  // namespace nucleifuse
