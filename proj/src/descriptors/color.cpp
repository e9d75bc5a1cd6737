// Colour-occurrence descriptors. Both are accumulated over the interior
// pixels of a square window, so 90-degree rotations permute the summands
// without changing the histogram.

#include <array>

#include "nucleifuse/descriptors.hpp"
#include "nucleifuse/error.hpp"

namespace nucleifuse::descriptors {

namespace {

std::vector<int> shade_map(const RgbImage& rgb, int (*shade)(std::uint8_t, std::uint8_t, std::uint8_t)) {
  std::vector<int> out(static_cast<std::size_t>(rgb.height) * rgb.width);
  for (int r = 0; r < rgb.height; ++r) {
    for (int c = 0; c < rgb.width; ++c) {
      out[static_cast<std::size_t>(r) * rgb.width + c] = shade(rgb.at(r, c, 0), rgb.at(r, c, 1), rgb.at(r, c, 2));
    }
  }
  return out;
}

FeatureVector normalised(DescriptorId id, const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (auto v : counts) total += v;
  FeatureVector fv{id, std::vector<double>(counts.size(), 0.0)};
  if (total == 0) return fv;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    fv.values[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  }
  return fv;
}

}  // namespace

int lcod_shade(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (r >> 5) * 32 + (g >> 5) * 4 + (b >> 6);
}

int rshd_shade(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return (r >> 6) * 16 + (g >> 6) * 4 + (b >> 6);
}

// Sum over interior pixels of the shade occurrences in their 3x3 window.
FeatureVector lcod(const RgbImage& rgb) {
  if (rgb.height < 3 || rgb.width < 3) throw InputError("LCOD needs a raster of at least 3x3");
  const auto shades = shade_map(rgb, &lcod_shade);
  std::vector<std::size_t> counts(dimension(DescriptorId::LCOD), 0);
  for (int r = 1; r + 1 < rgb.height; ++r) {
    for (int c = 1; c + 1 < rgb.width; ++c) {
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          ++counts[static_cast<std::size_t>(shades[static_cast<std::size_t>(r + dr) * rgb.width + c + dc])];
        }
      }
    }
  }
  return normalised(DescriptorId::LCOD, counts);
}

// Five rotation-invariant structuring elements around each interior pixel;
// element e contributes to bin e*64 + shade(centre) when it matches:
//   0: the centre alone (plain colour histogram)
//   1: all four edge neighbours share the centre shade
//   2: all four diagonal neighbours share the centre shade
//   3: some opposite edge pair (N-S or E-W) shares the centre shade
//   4: some opposite diagonal pair shares the centre shade
FeatureVector rshd(const RgbImage& rgb) {
  if (rgb.height < 3 || rgb.width < 3) throw InputError("RSHD needs a raster of at least 3x3");
  const auto shades = shade_map(rgb, &rshd_shade);
  auto at = [&](int r, int c) { return shades[static_cast<std::size_t>(r) * rgb.width + c]; };
  std::vector<std::size_t> counts(dimension(DescriptorId::RSHD), 0);
  for (int r = 1; r + 1 < rgb.height; ++r) {
    for (int c = 1; c + 1 < rgb.width; ++c) {
      const int s = at(r, c);
      const bool n = at(r - 1, c) == s;
      const bool south = at(r + 1, c) == s;
      const bool e = at(r, c + 1) == s;
      const bool w = at(r, c - 1) == s;
      const bool ne = at(r - 1, c + 1) == s;
      const bool nw = at(r - 1, c - 1) == s;
      const bool se = at(r + 1, c + 1) == s;
      const bool sw = at(r + 1, c - 1) == s;
      const std::array<bool, 5> match = {
          true,
          n && south && e && w,
          ne && nw && se && sw,
          (n && south) || (e && w),
          (ne && sw) || (nw && se),
      };
      for (std::size_t el = 0; el < match.size(); ++el) {
        if (match[el]) ++counts[el * 64 + static_cast<std::size_t>(s)];
      }
    }
  }
  return normalised(DescriptorId::RSHD, counts);
}

FeatureVector lcod(const ImagePatch& patch) { return lcod(patch.to_image()); }
FeatureVector rshd(const ImagePatch& patch) { return rshd(patch.to_image()); }

}  // namespace nucleifuse::descriptors
