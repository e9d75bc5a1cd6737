#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nucleifuse {

// Interleaved 8-bit RGB raster.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t& at(int r, int c, int ch) {
    return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
  std::uint8_t at(int r, int c, int ch) const {
    return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
  }
};

// Integer label raster (0 = background).
struct ClassMap {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> labels;

  ClassMap() = default;
  ClassMap(int h, int w) : height(h), width(w), labels(static_cast<std::size_t>(h) * w, 0) {}

  std::int32_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
  std::int32_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
};

// Single-channel real raster.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
};

inline constexpr int kPatchSize = 27;
inline constexpr int kPatchHalf = kPatchSize / 2;
inline constexpr std::size_t kPatchBytes = kPatchSize * kPatchSize * 3;

// Fixed 27x27 RGB window around a nucleus centre.
struct ImagePatch {
  std::array<std::uint8_t, kPatchBytes> pixels{};
  std::string source_id;
  int row = 0;
  int col = 0;
  int label = 0;

  std::uint8_t at(int r, int c, int ch) const { return pixels[(r * kPatchSize + c) * 3 + ch]; }
  std::uint8_t& at(int r, int c, int ch) { return pixels[(r * kPatchSize + c) * 3 + ch]; }

  RgbImage to_image() const;
};

// Throws InputError when the file cannot be decoded.
RgbImage load_rgb(const std::filesystem::path& path);
// Reads an 8- or 16-bit single channel raster without conversion.
ClassMap load_class_map(const std::filesystem::path& path);

void save_png(const RgbImage& image, const std::filesystem::path& path);
// Stored as 16-bit PNG.
void save_class_map(const ClassMap& map, const std::filesystem::path& path);

}  // namespace nucleifuse
