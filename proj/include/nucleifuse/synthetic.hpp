#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nucleifuse/image.hpp"
#include "nucleifuse/matrix.hpp"

namespace nucleifuse::synthetic {

struct ViewOptions {
  std::size_t per_class = 150;
  std::size_t views = 9;
  std::size_t width = 8;
  double reliability = 0.7;  // chance a view sees the true class of a sample
  double noise = 0.6;        // Gaussian noise around the class prototype
  std::uint64_t seed = 0;
};

struct ViewSet {
  Labels labels;
  std::vector<FeatureMatrix> views;  // source ids "view0", "view1", ...
};

// Weak independent views of a 4-class problem. Each view places a sample
// near the prototype of its true class with probability `reliability`,
// otherwise near the prototype of a random other class.
ViewSet make_views(const ViewOptions& options);

// Random 27x27 patches with class-dependent colour and texture. Row order
// cycles through the classes.
std::vector<ImagePatch> make_patches(std::size_t per_class, std::uint64_t seed);

// Gaussian matrix with the given source id.
FeatureMatrix random_features(std::size_t rows, std::size_t cols, std::uint64_t seed, std::string source_id);

}  // namespace nucleifuse::synthetic
