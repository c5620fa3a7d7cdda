#ifndef K3LIDAR_IO_HPP
#define K3LIDAR_IO_HPP

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace k3lidar::io {

// All on-disk integers are little-endian regardless of host order.

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!os) throw std::runtime_error("write failed");
}

inline void read_bytes(std::istream& is, void* data, std::size_t n) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw std::runtime_error("truncated stream");
}

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(value);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>(u >> (8 * i));
  write_bytes(os, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  unsigned char buf[sizeof(T)];
  read_bytes(is, buf, sizeof(T));
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    u |= static_cast<U>(buf[i]) << (8 * i);
  return static_cast<T>(u);
}

inline void write_f64le(std::ostream& os, double value) {
  write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(value));
}

inline double read_f64le(std::istream& is) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is));
}

// Bit payloads are stored LSB-first: byte i of the stream holds bits
// [8i, 8i+8) of the logical bit sequence.

inline void write_packed_words(std::ostream& os,
                               const std::vector<std::uint64_t>& words,
                               std::uint64_t n_bytes) {
  std::vector<unsigned char> buf(n_bytes);
  for (std::uint64_t i = 0; i < n_bytes; ++i)
    buf[i] = static_cast<unsigned char>(words[i / 8] >> (8 * (i % 8)));
  if (n_bytes > 0) write_bytes(os, buf.data(), n_bytes);
}

inline std::vector<std::uint64_t> read_packed_words(std::istream& is,
                                                    std::uint64_t n_words,
                                                    std::uint64_t n_bytes) {
  std::vector<unsigned char> buf(n_bytes);
  if (n_bytes > 0) read_bytes(is, buf.data(), n_bytes);
  std::vector<std::uint64_t> words(n_words, 0);
  for (std::uint64_t i = 0; i < n_bytes; ++i)
    words[i / 8] |= static_cast<std::uint64_t>(buf[i]) << (8 * (i % 8));
  return words;
}

}  // namespace k3lidar::io

#endif  // K3LIDAR_IO_HPP
