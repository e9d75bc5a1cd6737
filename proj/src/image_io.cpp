#include <algorithm>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "nucleifuse/error.hpp"
#include "nucleifuse/image.hpp"

namespace nucleifuse {

RgbImage ImagePatch::to_image() const {
  RgbImage img(kPatchSize, kPatchSize);
  std::copy(pixels.begin(), pixels.end(), img.pixels.begin());
  return img;
}

RgbImage load_rgb(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DependencyError("image not found: " + path.string());
  }
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw InputError("cannot decode image: " + path.string());
  RgbImage img(bgr.rows, bgr.cols);
  for (int r = 0; r < bgr.rows; ++r) {
    const auto* src = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < bgr.cols; ++c) {
      img.at(r, c, 0) = src[c][2];
      img.at(r, c, 1) = src[c][1];
      img.at(r, c, 2) = src[c][0];
    }
  }
  return img;
}

ClassMap load_class_map(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DependencyError("class map not found: " + path.string());
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw InputError("cannot decode class map: " + path.string());
  if (raw.channels() != 1) throw InputError("class map must be single-channel: " + path.string());
  cv::Mat labels;
  raw.convertTo(labels, CV_32S);
  ClassMap map(labels.rows, labels.cols);
  for (int r = 0; r < labels.rows; ++r) {
    const auto* src = labels.ptr<std::int32_t>(r);
    std::copy(src, src + labels.cols, map.labels.begin() + static_cast<std::ptrdiff_t>(r) * labels.cols);
  }
  return map;
}

void save_png(const RgbImage& image, const std::filesystem::path& path) {
  cv::Mat bgr(image.height, image.width, CV_8UC3);
  for (int r = 0; r < image.height; ++r) {
    auto* dst = bgr.ptr<cv::Vec3b>(r);
    for (int c = 0; c < image.width; ++c) {
      dst[c] = cv::Vec3b(image.at(r, c, 2), image.at(r, c, 1), image.at(r, c, 0));
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw InputError("cannot write image: " + path.string());
}

void save_class_map(const ClassMap& map, const std::filesystem::path& path) {
  cv::Mat out(map.height, map.width, CV_16UC1);
  for (int r = 0; r < map.height; ++r) {
    auto* dst = out.ptr<std::uint16_t>(r);
    for (int c = 0; c < map.width; ++c) dst[c] = static_cast<std::uint16_t>(map.at(r, c));
  }
  if (!cv::imwrite(path.string(), out)) throw InputError("cannot write class map: " + path.string());
}

}  // namespace nucleifuse
