#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "nucleifuse/error.hpp"

namespace nucleifuse::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void write_le(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

// Reads one value, throwing FormatError with the current offset when the
// stream ends early.
template <typename T>
T read_le(std::istream& in, const std::string& what) {
  const auto offset = static_cast<std::uint64_t>(in.tellg());
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw FormatError(what + ": unexpected end of file", offset + static_cast<std::uint64_t>(in.gcount()));
  }
  return value;
}

}  // namespace nucleifuse::detail
