#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nucleifuse/descriptors.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"

namespace nucleifuse::descriptors {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    d += t * t;
  }
  return d;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
      total += d2[i];
    }
    if (c + 1 == k) break;
    if (total <= 0.0) {
      pick = rng.below(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centers;
}

}  // namespace

std::size_t nearest_center(const Matrix& centers, std::span<const double> point) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(centers.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

KMeansResult kmeans(const Matrix& points, const KMeansOptions& options) {
  if (options.k == 0) throw InputError("k-means needs k >= 1");
  if (points.rows() < options.k) {
    throw InputError("k-means: " + std::to_string(points.rows()) + " points for " +
                     std::to_string(options.k) + " clusters");
  }
  Rng rng(options.seed);
  KMeansResult res;
  res.centers = seed_plus_plus(points, options.k, rng);
  res.assignment.assign(points.rows(), options.k);

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const auto c = nearest_center(res.centers, points.row(i));
      if (c != res.assignment[i]) {
        res.assignment[i] = c;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed) break;

    Matrix sums(options.k, points.cols());
    std::vector<std::size_t> counts(options.k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      auto dst = sums.row(res.assignment[i]);
      const auto src = points.row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
      ++counts[res.assignment[i]];
    }
    for (std::size_t c = 0; c < options.k; ++c) {
      if (counts[c] == 0) continue;
      auto dst = res.centers.row(c);
      const auto src = sums.row(c);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / static_cast<double>(counts[c]);
    }
  }
  return res;
}

// Per-channel 8-bin gradient orientation histograms of each 9x9 cell,
// averaged over R, G, B and L2-normalised.
Matrix bovw_local_descriptors(const ImagePatch& patch) {
  Matrix out(kBovwGrid * kBovwGrid, kBovwBins);
  const double bin_width = std::numbers::pi / kBovwBins;
  auto value = [&](int r, int c, int ch) {
    return static_cast<double>(patch.at(std::clamp(r, 0, kPatchSize - 1), std::clamp(c, 0, kPatchSize - 1), ch));
  };
  for (int gy = 0; gy < kBovwGrid; ++gy) {
    for (int gx = 0; gx < kBovwGrid; ++gx) {
      auto hist = out.row(static_cast<std::size_t>(gy * kBovwGrid + gx));
      for (int ch = 0; ch < 3; ++ch) {
        for (int r = gy * kBovwCellSize; r < (gy + 1) * kBovwCellSize; ++r) {
          for (int c = gx * kBovwCellSize; c < (gx + 1) * kBovwCellSize; ++c) {
            const double dx = value(r, c + 1, ch) - value(r, c - 1, ch);
            const double dy = value(r + 1, c, ch) - value(r - 1, c, ch);
            const double mag = std::hypot(dx, dy);
            if (mag == 0.0) continue;
            double theta = std::atan2(dy, dx);
            if (theta < 0.0) theta += std::numbers::pi;
            hist[static_cast<std::size_t>(std::min(static_cast<int>(theta / bin_width), kBovwBins - 1))] += mag / 3.0;
          }
        }
      }
      double sq = 0.0;
      for (double v : hist) sq += v * v;
      if (sq > 0.0) {
        const double norm = std::sqrt(sq);
        for (auto& v : hist) v /= norm;
      }
    }
  }
  return out;
}

BovwCodebook bovw_fit(std::span<const ImagePatch> training_patches, std::uint64_t seed) {
  const std::size_t per_patch = kBovwGrid * kBovwGrid;
  const std::size_t total = training_patches.size() * per_patch;
  if (total < kBovwWords) {
    throw InputError("BoVW fit needs at least " + std::to_string(kBovwWords) + " local descriptors, got " +
                     std::to_string(total));
  }
  Matrix locals(total, kBovwBins);
  for (std::size_t p = 0; p < training_patches.size(); ++p) {
    const Matrix d = bovw_local_descriptors(training_patches[p]);
    std::copy(d.data().begin(), d.data().end(),
              locals.data().begin() + static_cast<std::ptrdiff_t>(p * per_patch * kBovwBins));
  }
  BovwCodebook book;
  book.seed = seed;
  book.centers = kmeans(locals, {kBovwWords, 100, seed}).centers;
  return book;
}

FeatureVector bovw_encode(const Matrix& local_descriptors, const BovwCodebook& codebook) {
  if (codebook.centers.rows() != kBovwWords || local_descriptors.cols() != codebook.local_dim()) {
    throw InputError("BoVW codebook does not match the local descriptor layout");
  }
  FeatureVector fv{DescriptorId::BOVW, std::vector<double>(kBovwWords, 0.0)};
  if (local_descriptors.rows() == 0) return fv;
  for (std::size_t i = 0; i < local_descriptors.rows(); ++i) {
    fv.values[nearest_center(codebook.centers, local_descriptors.row(i))] += 1.0;
  }
  for (auto& v : fv.values) v /= static_cast<double>(local_descriptors.rows());
  return fv;
}

FeatureVector bovw_encode(const ImagePatch& patch, const BovwCodebook& codebook) {
  return bovw_encode(bovw_local_descriptors(patch), codebook);
}

}  // namespace nucleifuse::descriptors
