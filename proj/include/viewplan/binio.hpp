#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "viewplan/error.hpp"

// Little-endian binary primitives shared by the model / instance / dataset
// file formats. The build targets little-endian hosts; a big-endian port
// would swap here and nowhere else.

namespace viewplan::binio {

template <typename T>
void write(std::ostream& os, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read(std::istream& is, const std::string& what) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError("truncated read: " + what);
  return value;
}

inline void write_magic(std::ostream& os, const char magic[4]) {
  os.write(magic, 4);
}

inline void expect_magic(std::istream& is, const char magic[4],
                         const std::string& path) {
  char buf[4] = {};
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw FormatError(path + ": bad magic, not a " +
                      std::string(magic, magic + 4) + " file");
}

}  // namespace viewplan::binio
