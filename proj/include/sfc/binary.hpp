#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "sfc/errors.hpp"

namespace sfc::binary {

inline std::uint32_t byteswap32(std::uint32_t x) {
  return ((x & 0x000000FFu) << 24) | ((x & 0x0000FF00u) << 8) | ((x & 0x00FF0000u) >> 8) |
         ((x & 0xFF000000u) >> 24);
}

inline std::uint32_t to_little(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) return byteswap32(x);
  return x;
}

inline void put_u32(std::vector<char>& out, std::uint32_t value) {
  const std::uint32_t le = to_little(value);
  char bytes[4];
  std::memcpy(bytes, &le, 4);
  out.insert(out.end(), bytes, bytes + 4);
}

inline void put_f32(std::vector<char>& out, float value) { put_u32(out, std::bit_cast<std::uint32_t>(value)); }

inline std::uint32_t get_u32(const char* bytes) {
  std::uint32_t le;
  std::memcpy(&le, bytes, 4);
  return to_little(le);
}

inline float get_f32(const char* bytes) { return std::bit_cast<float>(get_u32(bytes)); }

inline void write_floats(std::ostream& os, std::span<const double> values) {
  std::vector<char> buf;
  buf.reserve(values.size() * 4);
  for (double v : values) put_f32(buf, static_cast<float>(v));
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<double> read_floats(std::istream& is, std::size_t count) {
  std::vector<char> buf(count * 4);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) throw IoError("unexpected end of binary payload");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = get_f32(buf.data() + 4 * i);
  return out;
}

}  // namespace sfc::binary
