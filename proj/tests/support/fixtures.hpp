#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nucleifuse/matrix.hpp"

namespace fixtures {

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

// Images plus `row,col,class_name` CSVs. counts[c] centres of class c are
// spread over `images` 80x80 pictures.
void write_crchisto(const std::filesystem::path& dir, int images, const std::vector<int>& counts,
                    std::uint64_t seed);

// One image with a 7-code class map: one 4x4 nucleus per code 1..7 plus a
// 3-pixel speck of code 3 that is too small to keep.
void write_consep(const std::filesystem::path& dir);

// Label-correlated stand-ins for exported network features, one FEATMAT
// per network at its real width. Returns the paths, network order.
std::vector<std::filesystem::path> write_deep_features(const std::filesystem::path& dir,
                                                       const nucleifuse::Labels& labels, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

// Runs the CLI with the given arguments (program name added).
int cli(std::vector<std::string> args);

}  // namespace fixtures
