#include <algorithm>
#include <cmath>

#include "nucleifuse/descriptors.hpp"

namespace nucleifuse::descriptors {

namespace {

constexpr double kSmoothingSigma = 1.2;
constexpr int kSmoothingRadius = 4;
constexpr int kWindow = 20;  // descriptor window side, in pixels
constexpr int kSubregions = 4;
constexpr double kWeightSigma = 3.3;

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

GrayImage gaussian_blur(const GrayImage& g) {
  std::vector<double> kernel(2 * kSmoothingRadius + 1);
  double sum = 0.0;
  for (int i = -kSmoothingRadius; i <= kSmoothingRadius; ++i) {
    kernel[i + kSmoothingRadius] = std::exp(-(i * i) / (2.0 * kSmoothingSigma * kSmoothingSigma));
    sum += kernel[i + kSmoothingRadius];
  }
  for (auto& k : kernel) k /= sum;

  GrayImage tmp(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      double acc = 0.0;
      for (int i = -kSmoothingRadius; i <= kSmoothingRadius; ++i) {
        acc += kernel[i + kSmoothingRadius] * g.at(r, reflect(c + i, g.width));
      }
      tmp.at(r, c) = acc;
    }
  }
  GrayImage out(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      double acc = 0.0;
      for (int i = -kSmoothingRadius; i <= kSmoothingRadius; ++i) {
        acc += kernel[i + kSmoothingRadius] * tmp.at(reflect(r + i, g.height), c);
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

}  // namespace

GrayImage hessian_response(const GrayImage& gray) {
  const GrayImage s = gaussian_blur(gray);
  GrayImage det(gray.height, gray.width);
  for (int r = 1; r + 1 < gray.height; ++r) {
    for (int c = 1; c + 1 < gray.width; ++c) {
      const double dxx = s.at(r, c + 1) - 2.0 * s.at(r, c) + s.at(r, c - 1);
      const double dyy = s.at(r + 1, c) - 2.0 * s.at(r, c) + s.at(r - 1, c);
      const double dxy =
          (s.at(r + 1, c + 1) - s.at(r + 1, c - 1) - s.at(r - 1, c + 1) + s.at(r - 1, c - 1)) / 4.0;
      det.at(r, c) = dxx * dyy - dxy * dxy;
    }
  }
  return det;
}

std::vector<Keypoint> detect_keypoints(const GrayImage& gray) {
  const GrayImage det = hessian_response(gray);
  const double peak = *std::max_element(det.values.begin(), det.values.end());
  std::vector<Keypoint> kps;
  if (!(peak > 0.0)) return kps;
  const double threshold = kSurfRelativeThreshold * peak;
  for (int r = 1; r + 1 < gray.height; ++r) {
    for (int c = 1; c + 1 < gray.width; ++c) {
      const double v = det.at(r, c);
      if (v <= 0.0 || v < threshold) continue;
      bool is_max = true;
      for (const auto& off : kNeighbors) {
        if (det.at(r + off[0], c + off[1]) >= v) {
          is_max = false;
          break;
        }
      }
      if (is_max) kps.push_back({r, c, v});
    }
  }
  std::stable_sort(kps.begin(), kps.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  return kps;
}

std::array<double, kSurfDescriptorSize> surf_descriptor(const GrayImage& g, const Keypoint& kp) {
  std::array<double, kSurfDescriptorSize> desc{};
  const int half = kWindow / 2;
  const int sub = kWindow / kSubregions;
  for (int i = 0; i < kWindow; ++i) {
    for (int j = 0; j < kWindow; ++j) {
      const int dy = i - half;
      const int dx = j - half;
      const int y = reflect(kp.row + dy, g.height);
      const int x = reflect(kp.col + dx, g.width);
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * kWeightSigma * kWeightSigma));
      const double hx = w * (g.at(y, reflect(x + 1, g.width)) - g.at(y, reflect(x - 1, g.width)));
      const double hy = w * (g.at(reflect(y + 1, g.height), x) - g.at(reflect(y - 1, g.height), x));
      double* cell = &desc[((i / sub) * kSubregions + j / sub) * 4];
      cell[0] += hx;
      cell[1] += hy;
      cell[2] += std::abs(hx);
      cell[3] += std::abs(hy);
    }
  }
  double sq = 0.0;
  for (double v : desc) sq += v * v;
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (auto& v : desc) v /= norm;
  }
  return desc;
}

FeatureVector surf_like(const GrayImage& gray) {
  FeatureVector fv{DescriptorId::SURF, std::vector<double>(dimension(DescriptorId::SURF), 0.0)};
  const auto kps = detect_keypoints(gray);
  const std::size_t used = std::min(kps.size(), kSurfMaxKeypoints);
  for (std::size_t k = 0; k < used; ++k) {
    const auto d = surf_descriptor(gray, kps[k]);
    std::copy(d.begin(), d.end(), fv.values.begin() + static_cast<std::ptrdiff_t>(k * kSurfDescriptorSize));
  }
  return fv;
}

FeatureVector surf_like(const ImagePatch& patch) { return surf_like(grayscale(patch)); }

}  // namespace nucleifuse::descriptors
