#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "nucleifuse/matrix.hpp"

namespace nucleifuse::reduction {

// Principal directions of the training data, strongest first.
struct PcaModel {
  std::vector<double> mean;                 // d
  Matrix components;                        // k x d, orthonormal rows
  std::vector<double> explained_variance;  // k, non-increasing

  std::size_t input_dim() const noexcept { return mean.size(); }
  std::size_t output_dim() const noexcept { return components.rows(); }
};

enum class FeatureKind { Handcrafted, Deep };

// Number of retained components: 100 for handcrafted, 1000 for deep
// features, never more than the input width.
std::size_t policy_components(FeatureKind kind, std::size_t input_dim);

// Top-k eigenvectors of the sample covariance (n - 1 denominator).
// Requires k <= min(n - 1, d). Each component is signed so that its
// largest-magnitude entry is positive.
PcaModel pca_fit(const Matrix& x, std::size_t k);

// (x - mean) * components^T
Matrix pca_transform(const PcaModel& model, const Matrix& x);

// projected * components + mean
Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected);

// Binary sidecar: "PCAMDL1\0", u64 d, u64 k, mean, components, variances
// (all little-endian).
void write_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel read_pca(const std::filesystem::path& path);

}  // namespace nucleifuse::reduction
