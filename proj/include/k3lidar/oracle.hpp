#ifndef K3LIDAR_ORACLE_HPP
#define K3LIDAR_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "k3lidar/index.hpp"
#include "k3lidar/point.hpp"

namespace k3lidar {

// Brute-force reference store: a flat point list answering the same queries
// as the index by linear scan. Ground truth for property tests.
struct FlatStore {
  std::vector<GridPoint> points;

  std::vector<GridPoint> scan_region(const Region& r) const {
    std::vector<GridPoint> out;
    for (const GridPoint& p : points)
      if (p.x >= r.x_lo && p.x <= r.x_hi && p.y >= r.y_lo && p.y <= r.y_hi &&
          p.z >= r.z_lo && p.z <= r.z_hi)
        out.push_back(p);
    return out;
  }

  std::vector<GridPoint> scan_filter(const Region& r, Attribute attribute,
                                     std::int64_t lo, std::int64_t hi) const {
    std::vector<GridPoint> out;
    for (const GridPoint& p : scan_region(r)) {
      std::int64_t v = attribute_value(p.attr, attribute);
      if (v >= lo && v <= hi) out.push_back(p);
    }
    return out;
  }
};

// Canonical multiset form: neither the index nor the oracle promises an
// output order.
inline std::vector<GridPoint> sorted_multiset(std::vector<GridPoint> points) {
  std::sort(points.begin(), points.end());
  return points;
}

inline bool same_multiset(std::vector<GridPoint> a, std::vector<GridPoint> b) {
  return sorted_multiset(std::move(a)) == sorted_multiset(std::move(b));
}

}  // namespace k3lidar

#endif  // K3LIDAR_ORACLE_HPP
