#pragma once

#include <cstdint>
#include <span>
#include <filesystem>
#include <string>
#include <vector>

#include "nucleifuse/matrix.hpp"

namespace nucleifuse::featstore {

// On-disk layout (little-endian), 52-byte header then row-major payload:
//   0  char[8]  "FEATMAT1"
//   8  u32      rows
//   12 u32      cols
//   16 u32      dtype (1 = float32)
//   20 char[32] source id, NUL padded
//   52 float32  rows * cols values
inline constexpr std::size_t kHeaderSize = 52;
inline constexpr std::size_t kSourceIdSize = 32;
inline constexpr std::uint32_t kDtypeFloat32 = 1;

struct FeatMatHeader {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t dtype = kDtypeFloat32;
  std::string source_id;
};

// Values are narrowed to float32; non-finite values are rejected.
void write_featmat(const Matrix& matrix, const std::string& source_id, const std::filesystem::path& path);
void write_featmat(const FeatureMatrix& matrix, const std::filesystem::path& path);

FeatMatHeader read_featmat_header(const std::filesystem::path& path);
FeatureMatrix read_featmat(const std::filesystem::path& path);

// CSV rows `sample_index,label` (optional header); indices must cover
// 0..n-1 exactly once, labels 0..3.
Labels read_labels(const std::filesystem::path& path);
void write_labels(std::span<const int> labels, const std::filesystem::path& path);

// Throws InputError unless rows == labels.
void require_aligned(const FeatureMatrix& features, std::span<const int> labels);

}  // namespace nucleifuse::featstore
