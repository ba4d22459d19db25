#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "coopt/types.hpp"

namespace coopt::wire {

// Explicit little-endian scalar framing shared by the CPTD/CPTT formats and
// the protocol message frames; bit-exact on every host byte order.

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  std::uint8_t buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<std::uint8_t>(
        (static_cast<std::make_unsigned_t<T>>(value) >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  static_assert(std::is_integral_v<T>);
  std::uint8_t buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T)))
    throw FormatError("unexpected end of stream");
  std::make_unsigned_t<T> value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
  return static_cast<T>(value);
}

inline void put_f32(std::ostream& os, float f) {
  put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(f));
}

inline float get_f32(std::istream& is) {
  return std::bit_cast<float>(get_le<std::uint32_t>(is));
}

inline void put_f64(std::ostream& os, double d) {
  put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(d));
}

inline double get_f64(std::istream& is) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is));
}

inline void put_string(std::ostream& os, const std::string& s) {
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  const auto len = get_le<std::uint16_t>(is);
  std::string s(len, '\0');
  if (!is.read(s.data(), len)) throw FormatError("unexpected end of stream");
  return s;
}

}  // namespace coopt::wire
