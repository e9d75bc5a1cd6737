#include "nucleifuse/synthetic.hpp"

#include <cmath>

#include "nucleifuse/rng.hpp"

namespace nucleifuse::synthetic {

ViewSet make_views(const ViewOptions& o) {
  Rng rng(o.seed);
  ViewSet out;
  const std::size_t n = o.per_class * kNumClasses;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = static_cast<int>(i % kNumClasses);

  for (std::size_t v = 0; v < o.views; ++v) {
    Matrix prototypes(kNumClasses, o.width);
    for (double& x : prototypes.data()) x = rng.normal();
    Matrix m(n, o.width);
    for (std::size_t i = 0; i < n; ++i) {
      int seen = out.labels[i];
      if (rng.uniform() >= o.reliability) {
        seen = (seen + 1 + static_cast<int>(rng.below(kNumClasses - 1))) % static_cast<int>(kNumClasses);
      }
      for (std::size_t j = 0; j < o.width; ++j) {
        m(i, j) = prototypes(static_cast<std::size_t>(seen), j) + o.noise * rng.normal();
      }
    }
    out.views.emplace_back(std::move(m), "view" + std::to_string(v));
  }
  return out;
}

std::vector<ImagePatch> make_patches(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ImagePatch> patches;
  const std::size_t n = per_class * kNumClasses;
  patches.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % kNumClasses);
    ImagePatch p;
    p.source_id = "synthetic";
    p.row = static_cast<int>(i);
    p.col = 0;
    p.label = label;
    // A dark blob on a pink background; size and hue vary with the class.
    const double radius = 4.0 + 2.0 * label + rng.uniform(-1.0, 1.0);
    const double cr = kPatchHalf + rng.uniform(-2.0, 2.0);
    const double cc = kPatchHalf + rng.uniform(-2.0, 2.0);
    const double elong = label == 1 ? 2.5 : 1.0;
    for (int r = 0; r < kPatchSize; ++r) {
      for (int c = 0; c < kPatchSize; ++c) {
        const double dr = (r - cr) / elong, dc = c - cc;
        const bool inside = dr * dr + dc * dc <= radius * radius;
        std::array<double, 3> base = inside ? std::array<double, 3>{70.0 + 30 * label, 40.0, 120.0 - 20 * label}
                                            : std::array<double, 3>{230.0, 170.0, 200.0};
        for (int ch = 0; ch < 3; ++ch) {
          const double v = base[static_cast<std::size_t>(ch)] + 18.0 * rng.normal();
          p.pixels[static_cast<std::size_t>((r * kPatchSize + c) * 3 + ch)] =
              static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
    patches.push_back(std::move(p));
  }
  return patches;
}

FeatureMatrix random_features(std::size_t rows, std::size_t cols, std::uint64_t seed, std::string source_id) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal();
  return FeatureMatrix(std::move(m), std::move(source_id));
}

}  // namespace nucleifuse::synthetic
