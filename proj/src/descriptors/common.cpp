#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "nucleifuse/descriptors.hpp"

namespace nucleifuse::descriptors {

std::string_view name(DescriptorId id) {
  switch (id) {
    case DescriptorId::HOG: return "hog";
    case DescriptorId::LBP: return "lbp";
    case DescriptorId::BOVW: return "bovw";
    case DescriptorId::SURF: return "surf";
    case DescriptorId::LDEP: return "ldep";
    case DescriptorId::LWP: return "lwp";
    case DescriptorId::LCOD: return "lcod";
    case DescriptorId::RSHD: return "rshd";
    case DescriptorId::LBDP: return "lbdp";
  }
  return "unknown";
}

std::optional<DescriptorId> parse_descriptor(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (auto id : kAllDescriptors) {
    if (name(id) == lowered) return id;
  }
  return std::nullopt;
}

GrayImage grayscale(const RgbImage& image) {
  GrayImage g(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      g.at(r, c) = 0.299 * image.at(r, c, 0) + 0.587 * image.at(r, c, 1) + 0.114 * image.at(r, c, 2);
    }
  }
  return g;
}

GrayImage grayscale(const ImagePatch& patch) { return grayscale(patch.to_image()); }

std::vector<std::uint8_t> gray_levels(const GrayImage& gray) {
  std::vector<std::uint8_t> out(gray.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(gray.values[i]), 0L, 255L));
  }
  return out;
}

}  // namespace nucleifuse::descriptors
