#include "fixtures.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nucleifuse/cli.hpp"
#include "nucleifuse/dataset.hpp"
#include "nucleifuse/featstore.hpp"
#include "nucleifuse/image.hpp"
#include "nucleifuse/rng.hpp"

namespace fs = std::filesystem;
using namespace nucleifuse;

namespace fixtures {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nucleifuse_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

namespace {

void paint_nucleus(RgbImage& img, int r0, int c0, int label, Rng& rng) {
  const double radius = 3.0 + 1.5 * label;
  const double elong = label == 1 ? 2.0 : 1.0;
  for (int r = std::max(0, r0 - 12); r < std::min(img.height, r0 + 13); ++r) {
    for (int c = std::max(0, c0 - 12); c < std::min(img.width, c0 + 13); ++c) {
      const double dr = (r - r0) / elong, dc = c - c0;
      if (dr * dr + dc * dc > radius * radius) continue;
      const std::array<double, 3> colour = {60.0 + 35 * label, 30.0 + 10 * label, 130.0 - 25 * label};
      for (int ch = 0; ch < 3; ++ch) {
        img.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(colour[static_cast<std::size_t>(ch)] + 10 * rng.normal(), 0.0, 255.0));
      }
    }
  }
}

RgbImage background(int h, int w, Rng& rng) {
  RgbImage img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      img.at(r, c, 0) = static_cast<std::uint8_t>(std::clamp(225 + 12 * rng.normal(), 0.0, 255.0));
      img.at(r, c, 1) = static_cast<std::uint8_t>(std::clamp(165 + 12 * rng.normal(), 0.0, 255.0));
      img.at(r, c, 2) = static_cast<std::uint8_t>(std::clamp(200 + 12 * rng.normal(), 0.0, 255.0));
    }
  }
  return img;
}

}  // namespace

void write_crchisto(const fs::path& dir, int images, const std::vector<int>& counts, std::uint64_t seed) {
  fs::create_directories(dir);
  Rng rng(seed);
  std::vector<std::vector<std::array<int, 3>>> per_image(static_cast<std::size_t>(images));
  int slot = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (int i = 0; i < counts[c]; ++i, ++slot) {
      const auto img = static_cast<std::size_t>(slot % images);
      const int k = static_cast<int>(per_image[img].size());
      // Grid positions 16 px apart; includes border centres.
      per_image[img].push_back({2 + (k / 5) * 16, 2 + (k % 5) * 16, static_cast<int>(c)});
    }
  }
  for (int i = 0; i < images; ++i) {
    auto img = background(80, 80, rng);
    std::ostringstream csv;
    csv << "row,col,class\n";
    for (const auto& [r, c, label] : per_image[static_cast<std::size_t>(i)]) {
      paint_nucleus(img, r, c, label, rng);
      csv << r << ',' << c << ',' << dataset::kClassNames[static_cast<std::size_t>(label)] << '\n';
    }
    const std::string stem = "img" + std::to_string(i + 1);
    save_png(img, dir / (stem + ".png"));
    std::ofstream(dir / (stem + ".csv")) << csv.str();
  }
}

void write_consep(const fs::path& dir) {
  fs::create_directories(dir);
  Rng rng(7);
  auto img = background(40, 80, rng);
  ClassMap map(40, 80);
  for (int code = 1; code <= 7; ++code) {
    const int c0 = 4 + (code - 1) * 10;
    for (int r = 10; r < 14; ++r) {
      for (int c = c0; c < c0 + 4; ++c) map.at(r, c) = code;
    }
  }
  for (int c = 30; c < 33; ++c) map.at(30, c) = 3;
  save_png(img, dir / "tile.png");
  save_class_map(map, dir / "tile_class.png");
}

std::vector<fs::path> write_deep_features(const fs::path& dir, const Labels& labels, std::uint64_t seed) {
  const std::array<std::pair<const char*, std::size_t>, 6> nets = {
      std::pair{"alexnet", 4096}, {"vgg16", 4096}, {"vgg19", 4096}, {"resnet50", 2048}, {"densenet121", 1024},
      {"inceptionv3", 2048}};
  std::vector<fs::path> out;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    Rng rng(derive_seed(seed, k));
    const auto [name, width] = nets[k];
    Matrix m(labels.size(), width);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        const double signal = j % kNumClasses == static_cast<std::size_t>(labels[i]) ? 0.4 : 0.0;
        m(i, j) = signal + rng.normal();
      }
    }
    const auto path = dir / (std::string(name) + ".featmat");
    featstore::write_featmat(m, name, path);
    out.push_back(path);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nucleifuse");
  return nucleifuse::cli::run(args);
}

}  // namespace fixtures
