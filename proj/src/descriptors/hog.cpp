#include <algorithm>
#include <cmath>
#include <numbers>

#include "nucleifuse/descriptors.hpp"

namespace nucleifuse::descriptors {

namespace {

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

int cell_bound(int i, int extent) { return i * extent / kHogCells; }

}  // namespace

std::vector<double> hog_single_scale(const GrayImage& g) {
  std::vector<double> cells(kHogCells * kHogCells * kHogBins, 0.0);
  const double bin_width = std::numbers::pi / kHogBins;
  for (int cy = 0; cy < kHogCells; ++cy) {
    for (int cx = 0; cx < kHogCells; ++cx) {
      double* hist = &cells[(cy * kHogCells + cx) * kHogBins];
      for (int r = cell_bound(cy, g.height); r < cell_bound(cy + 1, g.height); ++r) {
        for (int c = cell_bound(cx, g.width); c < cell_bound(cx + 1, g.width); ++c) {
          const double gx = g.at(r, clamp_index(c + 1, g.width)) - g.at(r, clamp_index(c - 1, g.width));
          const double gy = g.at(clamp_index(r + 1, g.height), c) - g.at(clamp_index(r - 1, g.height), c);
          const double mag = std::hypot(gx, gy);
          if (mag == 0.0) continue;
          double theta = std::atan2(gy, gx);
          if (theta < 0.0) theta += std::numbers::pi;
          const int bin = std::min(static_cast<int>(theta / bin_width), kHogBins - 1);
          hist[bin] += mag;
        }
      }
    }
  }

  // 2x2 non-overlapping blocks of cells, each L2-normalised.
  constexpr double kEps = 1e-6;
  std::vector<double> out;
  out.reserve(cells.size());
  for (int by = 0; by < kHogCells; by += 2) {
    for (int bx = 0; bx < kHogCells; bx += 2) {
      std::vector<double> block;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const double* hist = &cells[((by + dy) * kHogCells + bx + dx) * kHogBins];
          block.insert(block.end(), hist, hist + kHogBins);
        }
      }
      double sq = 0.0;
      for (double v : block) sq += v * v;
      const double norm = std::sqrt(sq + kEps * kEps);
      for (double v : block) out.push_back(v / norm);
    }
  }
  return out;
}

GrayImage upsample2x(const GrayImage& g) {
  GrayImage out(g.height * 2, g.width * 2);
  for (int y = 0; y < out.height; ++y) {
    const double sy = std::clamp((y + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(g.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, g.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < out.width; ++x) {
      const double sx = std::clamp((x + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(g.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, g.width - 1);
      const double fx = sx - x0;
      const double top = g.at(y0, x0) * (1 - fx) + g.at(y0, x1) * fx;
      const double bottom = g.at(y1, x0) * (1 - fx) + g.at(y1, x1) * fx;
      out.at(y, x) = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

FeatureVector hog(const GrayImage& gray) {
  FeatureVector fv{DescriptorId::HOG, hog_single_scale(gray)};
  const auto fine = hog_single_scale(upsample2x(gray));
  fv.values.insert(fv.values.end(), fine.begin(), fine.end());
  return fv;
}

FeatureVector hog(const ImagePatch& patch) { return hog(grayscale(patch)); }

}  // namespace nucleifuse::descriptors
