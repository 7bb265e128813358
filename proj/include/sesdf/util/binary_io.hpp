#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>

#include "sesdf/common.hpp"

// Little-endian scalar I/O for the SESB / SESF / SESW containers.
namespace sesdf::binio {

template <typename T>
void write(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  os.write(bytes, sizeof(T));
}

template <typename T>
T read(std::istream& is) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  if (!is.read(bytes, sizeof(T))) throw Error("binary read: unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  char buf[8] = {};
  if (magic.size() > sizeof(buf) || !is.read(buf, static_cast<std::streamsize>(magic.size())) ||
      std::string_view(buf, magic.size()) != magic) {
    throw Error("bad magic: expected " + std::string(magic));
  }
}

}  // namespace sesdf::binio
