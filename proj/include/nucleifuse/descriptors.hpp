#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nucleifuse/image.hpp"
#include "nucleifuse/matrix.hpp"

namespace nucleifuse::descriptors {

enum class DescriptorId { HOG, LBP, BOVW, SURF, LDEP, LWP, LCOD, RSHD, LBDP };

inline constexpr std::array<DescriptorId, 9> kAllDescriptors = {
    DescriptorId::HOG,  DescriptorId::LBP, DescriptorId::BOVW, DescriptorId::SURF, DescriptorId::LDEP,
    DescriptorId::LWP,  DescriptorId::LCOD, DescriptorId::RSHD, DescriptorId::LBDP};

// Output width of each descriptor.
constexpr std::size_t dimension(DescriptorId id) {
  switch (id) {
    case DescriptorId::HOG: return 256;
    case DescriptorId::LBP: return 59;
    case DescriptorId::BOVW: return 100;
    case DescriptorId::SURF: return 1216;
    case DescriptorId::LDEP: return 24;
    case DescriptorId::LWP: return 256;
    case DescriptorId::LCOD: return 256;
    case DescriptorId::RSHD: return 320;
    case DescriptorId::LBDP: return 256;
  }
  return 0;
}

std::string_view name(DescriptorId id);  // lower-case, e.g. "hog"
std::optional<DescriptorId> parse_descriptor(std::string_view name);

struct FeatureVector {
  DescriptorId descriptor;
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

// BT.601 luma.
GrayImage grayscale(const ImagePatch& patch);
GrayImage grayscale(const RgbImage& image);

// Luma rounded to 0..255, used where bit planes are needed.
std::vector<std::uint8_t> gray_levels(const GrayImage& gray);

// ---------------------------------------------------------------------------
// Neighbourhood convention shared by the local-pattern descriptors: the 8
// neighbours at radius 1, counter-clockwise starting east. Bit k of a code
// belongs to neighbour k.
inline constexpr std::array<std::array<int, 2>, 8> kNeighbors = {{
    {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}}};

// Maps the 256 8-bit LBP codes onto 59 bins: the 58 uniform codes (at most
// two circular 0/1 transitions) in ascending code order, then one catch-all.
const std::array<int, 256>& uniform_lbp_table();

// Per-pixel codes over interior pixels, exposed for oracles and debugging.
int lbp_code(const GrayImage& g, int r, int c);
int ldep_code(const GrayImage& g, int r, int c);
int lwp_code(const GrayImage& g, int r, int c);
int lbdp_code(std::span<const std::uint8_t> levels, int width, int r, int c);

// Histogram descriptors accept any raster of at least 3x3; the ImagePatch
// overloads work on 27x27 windows.
FeatureVector lbp(const GrayImage& gray);
FeatureVector ldep(const GrayImage& gray);
FeatureVector lwp(const GrayImage& gray);
FeatureVector lbdp(const GrayImage& gray);
FeatureVector lcod(const RgbImage& rgb);
FeatureVector rshd(const RgbImage& rgb);

FeatureVector lbp(const ImagePatch& patch);
FeatureVector ldep(const ImagePatch& patch);
FeatureVector lwp(const ImagePatch& patch);
FeatureVector lbdp(const ImagePatch& patch);
FeatureVector lcod(const ImagePatch& patch);
FeatureVector rshd(const ImagePatch& patch);

// 8/8/4 levels per R/G/B channel -> 256 shades.
int lcod_shade(std::uint8_t r, std::uint8_t g, std::uint8_t b);
// 4/4/4 levels -> 64 shades.
int rshd_shade(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// ---------------------------------------------------------------------------
// HoG: 4x4 cells, 8 unsigned orientation bins, 2x2 non-overlapping blocks
// L2-normalised (128 values), computed on the patch and on its 2x bilinear
// upsampling and concatenated.
inline constexpr int kHogCells = 4;
inline constexpr int kHogBins = 8;

std::vector<double> hog_single_scale(const GrayImage& gray);
GrayImage upsample2x(const GrayImage& gray);
FeatureVector hog(const GrayImage& gray);
FeatureVector hog(const ImagePatch& patch);

// ---------------------------------------------------------------------------
// SURF-like keypoints: determinant of a Gaussian-smoothed Hessian, upright
// 64-value Haar descriptors.
inline constexpr std::size_t kSurfDescriptorSize = 64;
inline constexpr std::size_t kSurfMaxKeypoints = 19;
inline constexpr double kSurfRelativeThreshold = 1e-4;

struct Keypoint {
  int row = 0;
  int col = 0;
  double response = 0.0;
};

// Determinant-of-Hessian map on a Gaussian-smoothed copy of the input.
GrayImage hessian_response(const GrayImage& gray);
// Strict 3x3 local maxima above the relative threshold, strongest first,
// ties broken by raster order.
std::vector<Keypoint> detect_keypoints(const GrayImage& gray);
std::array<double, kSurfDescriptorSize> surf_descriptor(const GrayImage& gray, const Keypoint& kp);
FeatureVector surf_like(const GrayImage& gray);
FeatureVector surf_like(const ImagePatch& patch);

// ---------------------------------------------------------------------------
// Bag of visual words.

inline constexpr std::size_t kBovwWords = 100;
inline constexpr int kBovwGrid = 3;      // 3x3 local cells
inline constexpr int kBovwCellSize = 9;  // of 9x9 pixels
inline constexpr int kBovwBins = 8;

struct KMeansOptions {
  std::size_t k = kBovwWords;
  std::size_t max_iterations = 100;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  Matrix centers;
  std::vector<std::size_t> assignment;
  std::size_t iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Empty clusters keep their
// previous centre.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

// Nearest centre by squared Euclidean distance (lowest index on ties).
std::size_t nearest_center(const Matrix& centers, std::span<const double> point);

struct BovwCodebook {
  Matrix centers;  // kBovwWords x kBovwBins
  std::uint64_t seed = 0;

  std::size_t local_dim() const noexcept { return centers.cols(); }
};

// The 9 dense local descriptors of a patch, one row each.
Matrix bovw_local_descriptors(const ImagePatch& patch);
BovwCodebook bovw_fit(std::span<const ImagePatch> training_patches, std::uint64_t seed);
FeatureVector bovw_encode(const Matrix& local_descriptors, const BovwCodebook& codebook);
FeatureVector bovw_encode(const ImagePatch& patch, const BovwCodebook& codebook);

// ---------------------------------------------------------------------------

FeatureVector compute(DescriptorId id, const ImagePatch& patch, const BovwCodebook* codebook);

// One matrix per requested descriptor, rows in patch order. BoVW requires
// a fitted codebook. Work is spread over `threads` workers (0 = auto).
std::map<DescriptorId, FeatureMatrix> extract_all(std::span<const ImagePatch> patches,
                                                  const BovwCodebook* codebook,
                                                  std::span<const DescriptorId> which = kAllDescriptors,
                                                  unsigned threads = 1);

}  // namespace nucleifuse::descriptors
