#ifndef K3LIDAR_MORTON_HPP
#define K3LIDAR_MORTON_HPP

#include <cstdint>

namespace k3lidar {

// 3D Morton (z-order) key. Bits are interleaved from the most significant
// coordinate bit down, with x taking the high bit of each (x,y,z) triple, so
// sorting by key matches the x-major child order used by the tree. 32-bit
// coordinates need 96 key bits, hence the 128-bit result.
inline unsigned __int128 morton_key(std::uint32_t x, std::uint32_t y,
                                    std::uint32_t z) {
  unsigned __int128 key = 0;
  for (int b = 31; b >= 0; --b) {
    key = (key << 3) | (static_cast<unsigned>((x >> b) & 1) << 2) |
          (static_cast<unsigned>((y >> b) & 1) << 1) |
          (static_cast<unsigned>((z >> b) & 1));
  }
  return key;
}

}  // namespace k3lidar

#endif  // K3LIDAR_MORTON_HPP
