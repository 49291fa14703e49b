#pragma once

// Little-endian primitives shared by the .nsb, .nds and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "norm/error.hpp"

namespace norm::binio {

inline void write_magic(std::ostream& os, std::string_view magic8) {
  os.write(magic8.data(), 8);
}

inline void read_magic(std::istream& is, std::string_view expected8, std::string_view what) {
  char buf[8];
  is.read(buf, 8);
  require(static_cast<bool>(is), ErrorKind::ParseError, std::string(what) + ": truncated header");
  // Same family, other version digit: reject explicitly rather than guessing.
  if (std::memcmp(buf, expected8.data(), 6) == 0 && std::memcmp(buf, expected8.data(), 8) != 0)
    fail(ErrorKind::FormatVersion, std::string(what) + ": unsupported format version");
  require(std::memcmp(buf, expected8.data(), 8) == 0, ErrorKind::ParseError,
          std::string(what) + ": bad magic");
}

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const char b = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu);
    os.put(b);
  }
}

template <typename T>
T read_le(std::istream& is) {
  static_assert(std::is_integral_v<T>);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    require(c != std::char_traits<char>::eof(), ErrorKind::ParseError, "unexpected end of file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

inline void write_f64(std::ostream& os, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) write_le(os, std::bit_cast<std::uint64_t>(v));
  }
}

inline void read_f64(std::istream& is, std::span<double> out) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(out.data()),
            static_cast<std::streamsize>(out.size() * sizeof(double)));
    require(static_cast<bool>(is), ErrorKind::ParseError, "unexpected end of file");
  } else {
    for (double& v : out) v = std::bit_cast<double>(read_le<std::uint64_t>(is));
  }
}

}  // namespace norm::binio
