#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nucleifuse/image.hpp"
#include "nucleifuse/matrix.hpp"

namespace nucleifuse::dataset {

// Class index order shared by both datasets.
enum class NucleusClass : int { Epithelial = 0, Spindle = 1, Inflammatory = 2, Miscellaneous = 3 };

inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "epithelial", "spindle", "inflammatory", "miscellaneous"};

// Accepts the canonical names plus the CRCHistoPhenotypes spellings
// ("fibroblast", "others"). Case-insensitive.
std::optional<int> class_from_name(std::string_view name);

// CoNSeP class-map codes: 1 other, 2 inflammatory, 3 healthy epithelial,
// 4 malignant epithelial, 5 fibroblast, 6 muscle, 7 endothelial.
// Returns nullopt for background or unknown codes.
std::optional<int> merge_consep_label(int consep_code);

struct Center {
  int row = 0;
  int col = 0;
  int label = 0;
};

// One 27x27 patch per centre; the source is mirror-padded (reflect-101)
// so that border nuclei are kept.
std::vector<ImagePatch> extract_patches(const RgbImage& image, std::span<const Center> centers,
                                        const std::string& source_id);

enum class Connectivity { Four, Eight };

struct Component {
  int label = 0;  // raw class-map code
  std::size_t size = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
};

// Connected components of equal non-zero labels, in raster order of their
// first pixel.
std::vector<Component> find_components(const ClassMap& map, Connectivity connectivity);

struct ClassMapOptions {
  Connectivity connectivity = Connectivity::Eight;
  std::size_t min_component_size = 4;
};

std::vector<ImagePatch> extract_from_class_map(const RgbImage& image, const ClassMap& map,
                                               const std::string& source_id,
                                               const ClassMapOptions& options = {});

// Per-image annotation CSV, rows `row,col,class_name` (optional header).
std::vector<Center> read_annotations(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// ADASYN

struct SyntheticOrigin {
  std::size_t base = 0;      // index of the minority sample x_i
  std::size_t neighbor = 0;  // index of the chosen minority neighbour x_z
  double lambda = 0.0;
};

struct AdasynResult {
  Matrix samples;  // originals first (unchanged), synthetics appended
  Labels labels;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row
  std::size_t original_count = 0;
};

inline constexpr std::size_t kAdasynNeighbors = 5;

// Multi-class ADASYN against the largest class. Each minority class c gets
// G_c = n_max - n_c synthetics, distributed in proportion to the fraction of
// other-class samples among each point's k nearest neighbours.
AdasynResult adasyn_balance(const Matrix& features, std::span<const int> labels,
                            std::size_t k_neighbors, std::uint64_t seed);

// Balancing on flattened pixel vectors. Synthetic patches inherit the
// provenance of their base sample with source_id prefixed "synthetic:".
std::vector<ImagePatch> adasyn_balance_patches(std::span<const ImagePatch> patches,
                                               std::size_t k_neighbors, std::uint64_t seed);

std::array<std::size_t, kNumClasses> class_counts(std::span<const int> labels);

// ---------------------------------------------------------------------------
// Splits and folds

enum class Split : std::uint32_t { Train = 0, Validation = 1, Test = 2 };

struct SplitAssignment {
  enum class Kind { Holdout, Folds };
  Kind kind = Kind::Holdout;
  std::uint32_t buckets = 0;
  std::vector<std::uint32_t> bucket_of;  // one entry per sample

  std::vector<std::size_t> members(std::uint32_t bucket) const;
  std::vector<std::size_t> non_members(std::uint32_t bucket) const;
  std::size_t size() const noexcept { return bucket_of.size(); }
};

// Stratified train/validation/test split. Fractions must be in [0,1] and
// sum to 1 within 1e-9; bucket totals follow largest-remainder rounding.
SplitAssignment make_splits(std::span<const int> labels, std::array<double, 3> fractions,
                            std::uint64_t seed);

// Stratified k-fold assignment. Throws when k exceeds the smallest
// non-empty class.
SplitAssignment make_folds(std::span<const int> labels, std::uint32_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Patch archive: directory with patches.bin, index.csv and manifest.json.

struct DatasetManifest {
  std::string name;
  std::array<std::string, kNumClasses> class_names{};
  std::array<std::size_t, kNumClasses> counts_before{};
  std::array<std::size_t, kNumClasses> counts_after{};
  std::uint64_t seed = 0;
  std::array<double, 3> split_fractions{0.70, 0.15, 0.15};

  void validate() const;
};

struct PatchArchive {
  DatasetManifest manifest;
  std::vector<ImagePatch> patches;

  Labels labels() const;
};

void write_archive(const std::filesystem::path& dir, const PatchArchive& archive);
PatchArchive read_archive(const std::filesystem::path& dir);

}  // namespace nucleifuse::dataset
