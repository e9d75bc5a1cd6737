#include "nucleifuse/matrix.hpp"

#include <cmath>

#include "nucleifuse/error.hpp"

namespace nucleifuse {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InputError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::string FeatureMatrix::source_id() const {
  std::string id;
  for (const auto& b : blocks) {
    if (!id.empty()) id += '+';
    id += b.source_id;
  }
  return id;
}

void validate_labels(std::span<const int> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= static_cast<int>(kNumClasses)) {
      throw InputError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                       " is outside 0..3");
    }
  }
}

void require_finite(const Matrix& m, const std::string& what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw InputError(what + ": non-finite value at (" + std::to_string(r) + ", " +
                         std::to_string(c) + ")");
      }
    }
  }
}

Labels select(std::span<const int> labels, std::span<const std::size_t> indices) {
  Labels out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(labels[i]);
  return out;
}

}  // namespace nucleifuse
