#include "nucleifuse/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"

namespace nucleifuse::dataset {

namespace {

int reflect101(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  return fields;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    d += t * t;
  }
  return d;
}

// Indices of the k smallest distances (ties broken by index).
std::vector<std::size_t> k_smallest(const std::vector<std::pair<double, std::size_t>>& dist,
                                    std::size_t k) {
  auto sorted = dist;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(std::min(k, sorted.size()));
  std::partial_sort(sorted.begin(), mid, sorted.end());
  std::vector<std::size_t> out;
  for (auto it = sorted.begin(); it != mid; ++it) out.push_back(it->second);
  return out;
}

}  // namespace

std::optional<int> class_from_name(std::string_view name) {
  const std::string n = lower(trim(name));
  if (n == "epithelial") return 0;
  if (n == "spindle" || n == "fibroblast") return 1;
  if (n == "inflammatory") return 2;
  if (n == "miscellaneous" || n == "others" || n == "other") return 3;
  return std::nullopt;
}

std::optional<int> merge_consep_label(int consep_code) {
  switch (consep_code) {
    case 3:
    case 4:
      return static_cast<int>(NucleusClass::Epithelial);
    case 5:
    case 6:
    case 7:
      return static_cast<int>(NucleusClass::Spindle);
    case 2:
      return static_cast<int>(NucleusClass::Inflammatory);
    case 1:
      return static_cast<int>(NucleusClass::Miscellaneous);
    default:
      return std::nullopt;
  }
}

std::vector<ImagePatch> extract_patches(const RgbImage& image, std::span<const Center> centers,
                                        const std::string& source_id) {
  if (image.height < kPatchSize || image.width < kPatchSize) {
    throw InputError("image " + source_id + " is " + std::to_string(image.height) + "x" +
                     std::to_string(image.width) + ", smaller than the 27x27 window");
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const auto& c = centers[i];
    if (c.row < 0 || c.row >= image.height || c.col < 0 || c.col >= image.width) {
      throw InputError("center " + std::to_string(i) + " (" + std::to_string(c.row) + ", " +
                       std::to_string(c.col) + ") lies outside image " + source_id);
    }
    if (c.label < 0 || c.label >= static_cast<int>(kNumClasses)) {
      throw InputError("center " + std::to_string(i) + " has label outside 0..3");
    }
  }

  std::vector<ImagePatch> patches;
  patches.reserve(centers.size());
  for (const auto& c : centers) {
    ImagePatch p;
    p.source_id = source_id;
    p.row = c.row;
    p.col = c.col;
    p.label = c.label;
    for (int r = 0; r < kPatchSize; ++r) {
      const int sr = reflect101(c.row - kPatchHalf + r, image.height);
      for (int q = 0; q < kPatchSize; ++q) {
        const int sc = reflect101(c.col - kPatchHalf + q, image.width);
        for (int ch = 0; ch < 3; ++ch) p.at(r, q, ch) = image.at(sr, sc, ch);
      }
    }
    patches.push_back(std::move(p));
  }
  return patches;
}

std::vector<Component> find_components(const ClassMap& map, Connectivity connectivity) {
  std::vector<Component> out;
  std::vector<char> seen(map.labels.size(), 0);
  std::vector<std::pair<int, int>> stack;
  const int offsets8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
  const int offsets4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};

  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const auto idx = static_cast<std::size_t>(r) * map.width + c;
      const int label = map.labels[idx];
      if (label == 0 || seen[idx]) continue;
      Component comp;
      comp.label = label;
      double sum_r = 0.0;
      double sum_c = 0.0;
      seen[idx] = 1;
      stack.assign(1, {r, c});
      while (!stack.empty()) {
        const auto [pr, pc] = stack.back();
        stack.pop_back();
        ++comp.size;
        sum_r += pr;
        sum_c += pc;
        auto visit = [&](int dr, int dc) {
          const int nr = pr + dr;
          const int nc = pc + dc;
          if (nr < 0 || nr >= map.height || nc < 0 || nc >= map.width) return;
          const auto nidx = static_cast<std::size_t>(nr) * map.width + nc;
          if (seen[nidx] || map.labels[nidx] != label) return;
          seen[nidx] = 1;
          stack.emplace_back(nr, nc);
        };
        if (connectivity == Connectivity::Eight) {
          for (const auto& o : offsets8) visit(o[0], o[1]);
        } else {
          for (const auto& o : offsets4) visit(o[0], o[1]);
        }
      }
      comp.centroid_row = sum_r / static_cast<double>(comp.size);
      comp.centroid_col = sum_c / static_cast<double>(comp.size);
      out.push_back(comp);
    }
  }
  return out;
}

std::vector<ImagePatch> extract_from_class_map(const RgbImage& image, const ClassMap& map,
                                               const std::string& source_id,
                                               const ClassMapOptions& options) {
  if (map.height != image.height || map.width != image.width) {
    throw InputError("class map of " + source_id + " does not match the image size");
  }
  std::vector<Center> centers;
  for (const auto& comp : find_components(map, options.connectivity)) {
    if (comp.size < options.min_component_size) continue;
    const auto merged = merge_consep_label(comp.label);
    if (!merged) {
      throw InputError("class map of " + source_id + " contains unknown class code " +
                       std::to_string(comp.label));
    }
    centers.push_back({static_cast<int>(std::lround(comp.centroid_row)),
                       static_cast<int>(std::lround(comp.centroid_col)), *merged});
  }
  if (centers.empty()) return {};
  return extract_patches(image, centers, source_id);
}

std::vector<Center> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("annotation file not found: " + path.string());
  std::vector<Center> centers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected `row,col,class_name`");
    }
    Center c;
    try {
      std::size_t pos = 0;
      c.row = std::stoi(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("row");
      c.col = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("col");
    } catch (const std::exception&) {
      if (line_no == 1 && centers.empty()) continue;  // header
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad coordinates");
    }
    const auto label = class_from_name(fields[2]);
    if (!label) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown class '" +
                       fields[2] + "'");
    }
    c.label = *label;
    centers.push_back(c);
  }
  return centers;
}

// ---------------------------------------------------------------------------

std::array<std::size_t, kNumClasses> class_counts(std::span<const int> labels) {
  std::array<std::size_t, kNumClasses> counts{};
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

AdasynResult adasyn_balance(const Matrix& features, std::span<const int> labels,
                            std::size_t k_neighbors, std::uint64_t seed) {
  if (k_neighbors < 1) throw InputError("ADASYN needs k_neighbors >= 1");
  if (features.rows() != labels.size()) {
    throw InputError("ADASYN: " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  validate_labels(labels);
  const auto counts = class_counts(labels);
  const std::size_t n_max = *std::max_element(counts.begin(), counts.end());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] < n_max && counts[c] < k_neighbors + 1) {
      throw InputError("ADASYN: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                       " samples, needs at least k_neighbors+1 = " +
                       std::to_string(k_neighbors + 1));
    }
  }

  const std::size_t n = features.rows();
  Rng rng(seed);
  std::vector<std::vector<double>> synthetic;
  AdasynResult result;
  result.original_count = n;
  result.labels.assign(labels.begin(), labels.end());

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] >= n_max) continue;
    const double total_needed = static_cast<double>(n_max - counts[c]);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<std::size_t>(labels[i]) == c) members.push_back(i);
    }

    std::vector<double> ratio(members.size(), 0.0);
    std::vector<std::vector<std::size_t>> minority_neighbors(members.size());
    std::vector<std::pair<double, std::size_t>> all_dist;
    std::vector<std::pair<double, std::size_t>> own_dist;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t i = members[m];
      all_dist.clear();
      own_dist.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = squared_distance(features.row(i), features.row(j));
        all_dist.emplace_back(d, j);
        if (static_cast<std::size_t>(labels[j]) == c) own_dist.emplace_back(d, j);
      }
      std::size_t other = 0;
      for (auto j : k_smallest(all_dist, k_neighbors)) {
        if (static_cast<std::size_t>(labels[j]) != c) ++other;
      }
      ratio[m] = static_cast<double>(other) / static_cast<double>(k_neighbors);
      minority_neighbors[m] = k_smallest(own_dist, k_neighbors);
    }

    const double ratio_sum = std::accumulate(ratio.begin(), ratio.end(), 0.0);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const double share = ratio_sum > 0.0 ? ratio[m] / ratio_sum
                                           : 1.0 / static_cast<double>(members.size());
      const auto g = static_cast<std::size_t>(std::lround(share * total_needed));
      const auto base = features.row(members[m]);
      for (std::size_t s = 0; s < g; ++s) {
        const auto& nb = minority_neighbors[m];
        const std::size_t z = nb[rng.below(nb.size())];
        const double lambda = rng.uniform();
        const auto other_row = features.row(z);
        std::vector<double> row(base.size());
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = base[j] + lambda * (other_row[j] - base[j]);
        synthetic.push_back(std::move(row));
        result.origins.push_back({members[m], z, lambda});
        result.labels.push_back(static_cast<int>(c));
      }
    }
  }

  Matrix out(n + synthetic.size(), features.cols());
  std::copy(features.data().begin(), features.data().end(), out.data().begin());
  for (std::size_t s = 0; s < synthetic.size(); ++s) {
    std::copy(synthetic[s].begin(), synthetic[s].end(), out.row(n + s).begin());
  }
  result.samples = std::move(out);
  return result;
}

std::vector<ImagePatch> adasyn_balance_patches(std::span<const ImagePatch> patches,
                                               std::size_t k_neighbors, std::uint64_t seed) {
  Matrix flat(patches.size(), kPatchBytes);
  Labels labels;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    auto row = flat.row(i);
    for (std::size_t j = 0; j < kPatchBytes; ++j) row[j] = patches[i].pixels[j];
    labels.push_back(patches[i].label);
  }
  const auto balanced = adasyn_balance(flat, labels, k_neighbors, seed);

  std::vector<ImagePatch> out(patches.begin(), patches.end());
  for (std::size_t s = 0; s < balanced.origins.size(); ++s) {
    const auto& origin = balanced.origins[s];
    ImagePatch p = patches[origin.base];
    p.source_id = "synthetic:" + patches[origin.base].source_id;
    const auto row = balanced.samples.row(balanced.original_count + s);
    for (std::size_t j = 0; j < kPatchBytes; ++j) {
      p.pixels[j] = static_cast<std::uint8_t>(std::clamp(std::lround(row[j]), 0L, 255L));
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> SplitAssignment::members(std::uint32_t bucket) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bucket_of.size(); ++i) {
    if (bucket_of[i] == bucket) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SplitAssignment::non_members(std::uint32_t bucket) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bucket_of.size(); ++i) {
    if (bucket_of[i] != bucket) out.push_back(i);
  }
  return out;
}

namespace {

// Largest-remainder apportionment of `total` by `weights` (sum 1).
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights) {
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < weights.size(); ++b) {
    const double q = static_cast<double>(total) * weights[b];
    out[b] = static_cast<std::size_t>(std::floor(q + 1e-9));
    assigned += out[b];
    rema.emplace_back(-(q - static_cast<double>(out[b])), b);
  }
  std::sort(rema.begin(), rema.end());
  for (std::size_t i = 0; assigned < total && i < rema.size(); ++i, ++assigned) ++out[rema[i].second];
  return out;
}

std::vector<std::vector<std::size_t>> shuffled_members(std::span<const int> labels, Rng& rng) {
  std::vector<std::vector<std::size_t>> members(kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);
  for (auto& m : members) rng.shuffle(std::span<std::size_t>(m));
  return members;
}

}  // namespace

SplitAssignment make_splits(std::span<const int> labels, std::array<double, 3> fractions,
                            std::uint64_t seed) {
  validate_labels(labels);
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw InputError("split fractions must lie in [0, 1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("split fractions must sum to 1");

  Rng rng(seed);
  const auto members = shuffled_members(labels, rng);
  const auto totals = apportion(labels.size(), fractions);

  // Per-class floors, then hand out the remaining units by largest
  // fractional quota while respecting both row and column totals.
  std::array<std::array<std::size_t, 3>, kNumClasses> alloc{};
  std::array<std::size_t, kNumClasses> row_left{};
  std::array<std::size_t, 3> col_left = {totals[0], totals[1], totals[2]};
  std::vector<std::tuple<double, std::size_t, std::size_t>> cells;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    row_left[c] = members[c].size();
    for (std::size_t b = 0; b < 3; ++b) {
      const double q = static_cast<double>(members[c].size()) * fractions[b];
      alloc[c][b] = std::min(static_cast<std::size_t>(std::floor(q + 1e-9)), col_left[b]);
      row_left[c] -= alloc[c][b];
      col_left[b] -= alloc[c][b];
      cells.emplace_back(-(q - std::floor(q + 1e-9)), c, b);
    }
  }
  std::sort(cells.begin(), cells.end());
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& [neg_frac, c, b] : cells) {
      if (pass == 0 && neg_frac >= 0.0) continue;
      while (row_left[c] > 0 && col_left[b] > 0) {
        ++alloc[c][b];
        --row_left[c];
        --col_left[b];
        if (pass == 0) break;
      }
    }
  }

  SplitAssignment out;
  out.kind = SplitAssignment::Kind::Holdout;
  out.buckets = 3;
  out.bucket_of.assign(labels.size(), 0);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t pos = 0;
    for (std::uint32_t b = 0; b < 3; ++b) {
      for (std::size_t j = 0; j < alloc[c][b]; ++j) out.bucket_of[members[c][pos++]] = b;
    }
  }
  return out;
}

SplitAssignment make_folds(std::span<const int> labels, std::uint32_t k, std::uint64_t seed) {
  validate_labels(labels);
  if (k < 2) throw InputError("fold count must be at least 2");
  const auto counts = class_counts(labels);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] > 0 && counts[c] < k) {
      throw InputError(std::to_string(k) + " folds exceed the " + std::to_string(counts[c]) +
                       " samples of class " + std::to_string(c));
    }
  }
  Rng rng(seed);
  const auto members = shuffled_members(labels, rng);
  SplitAssignment out;
  out.kind = SplitAssignment::Kind::Folds;
  out.buckets = k;
  out.bucket_of.assign(labels.size(), 0);
  std::size_t offset = 0;
  for (const auto& m : members) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      out.bucket_of[m[j]] = static_cast<std::uint32_t>((offset + j) % k);
    }
    offset += m.size();
  }
  return out;
}

// ---------------------------------------------------------------------------

void DatasetManifest::validate() const {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts_after[c] < counts_before[c]) {
      throw InputError("manifest: counts_after[" + std::to_string(c) + "] < counts_before");
    }
  }
  double sum = 0.0;
  for (double f : split_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw InputError("manifest: split fractions must lie in (0, 1)");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("manifest: split fractions must sum to 1");
}

Labels PatchArchive::labels() const {
  Labels out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(p.label);
  return out;
}

void write_archive(const std::filesystem::path& dir, const PatchArchive& archive) {
  archive.manifest.validate();
  std::filesystem::create_directories(dir);
  {
    std::ofstream bin(dir / "patches.bin", std::ios::binary);
    for (const auto& p : archive.patches) {
      bin.write(reinterpret_cast<const char*>(p.pixels.data()), kPatchBytes);
    }
    if (!bin) throw InputError("cannot write " + (dir / "patches.bin").string());
  }
  {
    std::ofstream idx(dir / "index.csv", std::ios::binary);
    idx << "index,source_id,row,col,label\n";
    for (std::size_t i = 0; i < archive.patches.size(); ++i) {
      const auto& p = archive.patches[i];
      if (p.source_id.find_first_of(",\n") != std::string::npos) {
        throw InputError("source id '" + p.source_id + "' contains a comma or newline");
      }
      idx << i << ',' << p.source_id << ',' << p.row << ',' << p.col << ',' << p.label << '\n';
    }
  }
  const auto& m = archive.manifest;
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["class_names"] = m.class_names;
  j["counts_before"] = m.counts_before;
  j["counts_after"] = m.counts_after;
  j["seed"] = m.seed;
  j["split_fractions"] = m.split_fractions;
  j["patch_count"] = archive.patches.size();
  std::ofstream(dir / "manifest.json", std::ios::binary) << j.dump(2) << '\n';
}

PatchArchive read_archive(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw DependencyError("patch archive manifest not found: " + manifest_path.string());
  }
  PatchArchive archive;
  nlohmann::json j;
  try {
    std::ifstream(manifest_path) >> j;
    auto& m = archive.manifest;
    m.name = j.at("name").get<std::string>();
    m.class_names = j.at("class_names").get<std::array<std::string, kNumClasses>>();
    m.counts_before = j.at("counts_before").get<std::array<std::size_t, kNumClasses>>();
    m.counts_after = j.at("counts_after").get<std::array<std::size_t, kNumClasses>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.split_fractions = j.at("split_fractions").get<std::array<double, 3>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("manifest.json: " + std::string(e.what()));
  }
  archive.manifest.validate();

  std::ifstream idx(dir / "index.csv");
  if (!idx) throw DependencyError("patch index not found: " + (dir / "index.csv").string());
  std::ifstream bin(dir / "patches.bin", std::ios::binary);
  if (!bin) throw DependencyError("patch data not found: " + (dir / "patches.bin").string());
  std::string line;
  std::getline(idx, line);
  std::size_t expected = 0;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5 || std::stoul(f[0]) != expected) {
      throw InputError("index.csv: malformed row " + std::to_string(expected));
    }
    ImagePatch p;
    p.source_id = f[1];
    p.row = std::stoi(f[2]);
    p.col = std::stoi(f[3]);
    p.label = std::stoi(f[4]);
    bin.read(reinterpret_cast<char*>(p.pixels.data()), kPatchBytes);
    if (bin.gcount() != static_cast<std::streamsize>(kPatchBytes)) {
      throw FormatError("patches.bin truncated", expected * kPatchBytes + static_cast<std::uint64_t>(bin.gcount()));
    }
    archive.patches.push_back(std::move(p));
    ++expected;
  }
  validate_labels(archive.labels());
  return archive;
}

}  // namespace nucleifuse::dataset
