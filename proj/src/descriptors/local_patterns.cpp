// LBP, LDEP, LWP and LBDP: per-pixel 3x3 codes histogrammed over the
// interior pixels and L1-normalised.

#include <array>
#include <bit>
#include <cstdint>

#include "nucleifuse/descriptors.hpp"
#include "nucleifuse/error.hpp"

namespace nucleifuse::descriptors {

namespace {

void require_interior(int height, int width, std::string_view what) {
  if (height < 3 || width < 3) {
    throw InputError(std::string(what) + " needs a raster of at least 3x3");
  }
}

template <typename CodeFn>
FeatureVector code_histogram(DescriptorId id, int height, int width, CodeFn&& code_at) {
  FeatureVector fv{id, std::vector<double>(dimension(id), 0.0)};
  std::vector<std::size_t> counts(fv.values.size(), 0);
  std::size_t total = 0;
  for (int r = 1; r + 1 < height; ++r) {
    for (int c = 1; c + 1 < width; ++c) {
      ++counts[static_cast<std::size_t>(code_at(r, c))];
      ++total;
    }
  }
  for (std::size_t b = 0; b < counts.size(); ++b) {
    fv.values[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  }
  return fv;
}

int circular_transitions(unsigned code) {
  const unsigned rotated = ((code >> 1) | (code << 7)) & 0xFFu;
  return std::popcount(code ^ rotated);
}

}  // namespace

const std::array<int, 256>& uniform_lbp_table() {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    int next = 0;
    for (unsigned code = 0; code < 256; ++code) {
      t[code] = circular_transitions(code) <= 2 ? next++ : -1;
    }
    for (auto& v : t) {
      if (v < 0) v = next;  // catch-all, 58
    }
    return t;
  }();
  return table;
}

int lbp_code(const GrayImage& g, int r, int c) {
  const double center = g.at(r, c);
  int code = 0;
  for (int k = 0; k < 8; ++k) {
    if (g.at(r + kNeighbors[k][0], c + kNeighbors[k][1]) >= center) code |= 1 << k;
  }
  return code;
}

// Diagonal neighbours are ring positions 1, 3, 5, 7. The code combines the
// position of the diagonal maximum (first on ties), the position of the
// diagonal minimum (last on ties, distinct from the maximum) and whether the
// centre lies outside the diagonal range (12 x 2 = 24 codes).
int ldep_code(const GrayImage& g, int r, int c) {
  std::array<double, 4> diag{};
  for (int i = 0; i < 4; ++i) {
    const auto& off = kNeighbors[2 * i + 1];
    diag[i] = g.at(r + off[0], c + off[1]);
  }
  int max_pos = 0;
  for (int i = 1; i < 4; ++i) {
    if (diag[i] > diag[max_pos]) max_pos = i;
  }
  int min_pos = -1;
  for (int i = 0; i < 4; ++i) {
    if (i == max_pos) continue;
    if (min_pos < 0 || diag[i] <= diag[min_pos]) min_pos = i;
  }
  const int min_rank = min_pos < max_pos ? min_pos : min_pos - 1;
  const double center = g.at(r, c);
  const bool above_max = diag[max_pos] - center >= 0.0;
  const bool above_min = diag[min_pos] - center >= 0.0;
  const int outside = above_max == above_min ? 1 : 0;
  return outside * 12 + max_pos * 3 + min_rank;
}

// Unnormalised three-level Haar decomposition of the neighbour ring. Bit 0
// compares the approximation coefficient with that of a flat ring at the
// centre value; bits 1..7 are the signs (>= 0) of the detail coefficients
// ordered coarse to fine.
int lwp_code(const GrayImage& g, int r, int c) {
  std::array<double, 8> ring{};
  for (int k = 0; k < 8; ++k) ring[k] = g.at(r + kNeighbors[k][0], c + kNeighbors[k][1]);

  std::array<double, 4> a1{};
  std::array<double, 4> d1{};
  for (int i = 0; i < 4; ++i) {
    a1[i] = ring[2 * i] + ring[2 * i + 1];
    d1[i] = ring[2 * i] - ring[2 * i + 1];
  }
  const std::array<double, 2> a2 = {a1[0] + a1[1], a1[2] + a1[3]};
  const std::array<double, 2> d2 = {a1[0] - a1[1], a1[2] - a1[3]};
  const double a3 = a2[0] + a2[1];
  const double d3 = a2[0] - a2[1];

  const std::array<double, 8> coeffs = {a3 - 8.0 * g.at(r, c), d3, d2[0], d2[1], d1[0], d1[1], d1[2], d1[3]};
  int code = 0;
  for (int k = 0; k < 8; ++k) {
    if (coeffs[k] >= 0.0) code |= 1 << k;
  }
  return code;
}

// For each bit plane b the neighbours' bits are decoded into an 8-bit value
// (neighbour k -> weight 2^k); bit b of the code is set when that decoded
// value is >= the centre intensity.
int lbdp_code(std::span<const std::uint8_t> levels, int width, int r, int c) {
  auto at = [&](int rr, int cc) { return levels[static_cast<std::size_t>(rr) * width + cc]; };
  const int center = at(r, c);
  int code = 0;
  for (int b = 0; b < 8; ++b) {
    int decoded = 0;
    for (int k = 0; k < 8; ++k) {
      decoded |= ((at(r + kNeighbors[k][0], c + kNeighbors[k][1]) >> b) & 1) << k;
    }
    if (decoded >= center) code |= 1 << b;
  }
  return code;
}

FeatureVector lbp(const GrayImage& gray) {
  require_interior(gray.height, gray.width, "LBP");
  const auto& table = uniform_lbp_table();
  return code_histogram(DescriptorId::LBP, gray.height, gray.width,
                        [&](int r, int c) { return table[static_cast<std::size_t>(lbp_code(gray, r, c))]; });
}

FeatureVector ldep(const GrayImage& gray) {
  require_interior(gray.height, gray.width, "LDEP");
  return code_histogram(DescriptorId::LDEP, gray.height, gray.width,
                        [&](int r, int c) { return ldep_code(gray, r, c); });
}

FeatureVector lwp(const GrayImage& gray) {
  require_interior(gray.height, gray.width, "LWP");
  return code_histogram(DescriptorId::LWP, gray.height, gray.width,
                        [&](int r, int c) { return lwp_code(gray, r, c); });
}

FeatureVector lbdp(const GrayImage& gray) {
  require_interior(gray.height, gray.width, "LBDP");
  const auto levels = gray_levels(gray);
  return code_histogram(DescriptorId::LBDP, gray.height, gray.width,
                        [&](int r, int c) { return lbdp_code(levels, gray.width, r, c); });
}

FeatureVector lbp(const ImagePatch& patch) { return lbp(grayscale(patch)); }
FeatureVector ldep(const ImagePatch& patch) { return ldep(grayscale(patch)); }
FeatureVector lwp(const ImagePatch& patch) { return lwp(grayscale(patch)); }
FeatureVector lbdp(const ImagePatch& patch) { return lbdp(grayscale(patch)); }

}  // namespace nucleifuse::descriptors
