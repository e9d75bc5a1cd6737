#include "nucleifuse/featstore.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "nucleifuse/error.hpp"

namespace nucleifuse::featstore {

namespace {

constexpr char kMagic[8] = {'F', 'E', 'A', 'T', 'M', 'A', 'T', '1'};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

FeatMatHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError(path.string() + ": bad FEATMAT magic", 0);
  }
  FeatMatHeader h;
  h.rows = detail::read_le<std::uint32_t>(in, path.string());
  h.cols = detail::read_le<std::uint32_t>(in, path.string());
  h.dtype = detail::read_le<std::uint32_t>(in, path.string());
  if (h.dtype != kDtypeFloat32) throw FormatError(path.string() + ": unsupported dtype " + std::to_string(h.dtype), 16);
  char id[kSourceIdSize] = {};
  in.read(id, kSourceIdSize);
  if (in.gcount() != static_cast<std::streamsize>(kSourceIdSize)) {
    throw FormatError(path.string() + ": truncated header", 20 + static_cast<std::uint64_t>(in.gcount()));
  }
  h.source_id.assign(id, strnlen(id, kSourceIdSize));
  return h;
}

}  // namespace

void write_featmat(const Matrix& matrix, const std::string& source_id, const std::filesystem::path& path) {
  if (source_id.size() > kSourceIdSize) {
    throw InputError("FEATMAT source id '" + source_id + "' is longer than 32 bytes");
  }
  if (matrix.rows() > UINT32_MAX || matrix.cols() > UINT32_MAX) throw InputError("FEATMAT dimensions exceed 32 bits");
  require_finite(matrix, "FEATMAT " + source_id);
  std::vector<float> payload(matrix.data().size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    payload[i] = static_cast<float>(matrix.data()[i]);
    if (!std::isfinite(payload[i])) {
      throw InputError("FEATMAT " + source_id + ": value at flat index " + std::to_string(i) + " overflows float32");
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.rows()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.cols()));
  detail::write_le<std::uint32_t>(out, kDtypeFloat32);
  char id[kSourceIdSize] = {};
  std::memcpy(id, source_id.data(), source_id.size());
  out.write(id, kSourceIdSize);
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw InputError("failed writing " + path.string());
}

void write_featmat(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  write_featmat(matrix.values, matrix.source_id(), path);
}

FeatMatHeader read_featmat_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("feature file not found: " + path.string());
  return parse_header(in, path);
}

FeatureMatrix read_featmat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("feature file not found: " + path.string());
  const auto h = parse_header(in, path);
  const std::size_t count = static_cast<std::size_t>(h.rows) * h.cols;
  const std::uint64_t expected = kHeaderSize + count * sizeof(float);
  const auto file_size = std::filesystem::file_size(path);
  if (file_size < expected) {
    throw FormatError(path.string() + ": payload truncated, expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(file_size),
                      file_size);
  }
  if (file_size > expected) {
    throw FormatError(path.string() + ": trailing bytes after payload", expected);
  }
  std::vector<float> payload(count);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(float)));
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(payload[i])) {
      throw FormatError(path.string() + ": non-finite value", kHeaderSize + i * sizeof(float));
    }
    values[i] = payload[i];
  }
  return FeatureMatrix(Matrix(h.rows, h.cols, std::move(values)), h.source_id);
}

Labels read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("label file not found: " + path.string());
  std::vector<std::pair<long long, long long>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected `sample_index,label`");
    }
    try {
      std::size_t p1 = 0;
      std::size_t p2 = 0;
      const std::string a = trim(line.substr(0, comma));
      const std::string b = trim(line.substr(comma + 1));
      const long long idx = std::stoll(a, &p1);
      const long long lab = std::stoll(b, &p2);
      if (p1 != a.size() || p2 != b.size()) throw std::invalid_argument("trailing");
      rows.emplace_back(idx, lab);
    } catch (const std::exception&) {
      if (line_no == 1) continue;  // header
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  Labels labels(rows.size(), -1);
  for (const auto& [idx, lab] : rows) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= rows.size()) {
      throw InputError(path.string() + ": sample index " + std::to_string(idx) + " outside 0.." +
                       std::to_string(rows.size() - 1) + " (gap or out-of-range index)");
    }
    if (lab < 0 || lab >= static_cast<long long>(kNumClasses)) {
      throw InputError(path.string() + ": label " + std::to_string(lab) + " for sample " + std::to_string(idx) +
                       " is outside 0..3");
    }
    if (labels[static_cast<std::size_t>(idx)] != -1) {
      throw InputError(path.string() + ": duplicate sample index " + std::to_string(idx));
    }
    labels[static_cast<std::size_t>(idx)] = static_cast<int>(lab);
  }
  return labels;
}

void write_labels(std::span<const int> labels, const std::filesystem::path& path) {
  validate_labels(labels);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << "sample_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

void require_aligned(const FeatureMatrix& features, std::span<const int> labels) {
  if (features.rows() != labels.size()) {
    throw InputError("feature matrix " + features.source_id() + " has " + std::to_string(features.rows()) +
                     " rows but there are " + std::to_string(labels.size()) + " labels");
  }
}

}  // namespace nucleifuse::featstore
