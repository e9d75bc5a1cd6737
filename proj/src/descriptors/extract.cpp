#include <algorithm>
#include <exception>
#include <thread>

#include "nucleifuse/descriptors.hpp"
#include "nucleifuse/error.hpp"

namespace nucleifuse::descriptors {

FeatureVector compute(DescriptorId id, const ImagePatch& patch, const BovwCodebook* codebook) {
  switch (id) {
    case DescriptorId::HOG: return hog(patch);
    case DescriptorId::LBP: return lbp(patch);
    case DescriptorId::BOVW:
      if (codebook == nullptr) throw DependencyError("BoVW features need a fitted codebook");
      return bovw_encode(patch, *codebook);
    case DescriptorId::SURF: return surf_like(patch);
    case DescriptorId::LDEP: return ldep(patch);
    case DescriptorId::LWP: return lwp(patch);
    case DescriptorId::LCOD: return lcod(patch);
    case DescriptorId::RSHD: return rshd(patch);
    case DescriptorId::LBDP: return lbdp(patch);
  }
  throw InputError("unknown descriptor");
}

std::map<DescriptorId, FeatureMatrix> extract_all(std::span<const ImagePatch> patches,
                                                  const BovwCodebook* codebook,
                                                  std::span<const DescriptorId> which, unsigned threads) {
  std::map<DescriptorId, FeatureMatrix> out;
  for (auto id : which) {
    if (id == DescriptorId::BOVW && codebook == nullptr) {
      throw DependencyError("BoVW features need a fitted codebook");
    }
    out.emplace(id, FeatureMatrix(Matrix(patches.size(), dimension(id)), std::string(name(id))));
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(patches.size(), 1)));

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (auto id : which) {
        const auto fv = compute(id, patches[i], codebook);
        std::copy(fv.values.begin(), fv.values.end(), out.at(id).values.row(i).begin());
      }
    }
  };

  if (threads <= 1) {
    work(0, patches.size());
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (patches.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(patches.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, t, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace nucleifuse::descriptors
