#ifndef K3LIDAR_TESTS_FIXTURES_HPP
#define K3LIDAR_TESTS_FIXTURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "k3lidar/index.hpp"
#include "k3lidar/point.hpp"

namespace k3lidar::testing {

// Hand-checked ten-point cloud on an 8x8x8 grid, built with k=2 and leaf
// threshold 3. Intensity encodes the point id (100 + 10*id) so payload order
// is observable. The expected compact structure, derived by hand:
//
//   child index of the root = 4x' + 2y' + z' (x-major), side 4:
//     child 0 holds ids {5,6,7,8} -> 4 > 3, subdivides: tree[0] = 1
//     child 1 is empty            -> tree[1] = 0, occupancy[0] = 0
//     child 4 holds ids {2,3,1}   -> tree[4] = 0, its unary group is "001"
//     children 5/6/7 hold one point each; children 2/3 are empty
//   child 0's eight side-2 children (tree positions 8..15) hold at most one
//   point each, so tree = 1 followed by fifteen zeros.
//
//   leaf order (tree-zero positions): 4,5,6,7,8,9,10,12 non-empty.
//   occupancy = 000 1111 111 0 1 000  (15 bits)
//   counts    = 001 1111111           (10 bits)
//   local x   = 1 1 2 | 1 | 3 | 0 | 0 | 1 | 1 | 1
//   local y   = 0 0 0 | 1 | 3 | 2 | 0 | 0 | 1 | 1
//   local z   = 0 1 0 | 2 | 3 | 3 | 0 | 1 | 0 | 1
//   intensity = 120 130 110 | 140 | 190 | 200 | 150 | 180 | 170 | 160
//
// Inside the {2,3,1} leaf the z-order of locals (1,0,0),(1,0,1),(2,0,0)
// sorts ids as 2, 3, 1; id 2 has global (5,0,0) and local (1,0,0).
struct TenPointCloud {
  std::vector<GridPoint> points;
  BuildConfig config;

  std::vector<bool> expected_tree;
  std::vector<bool> expected_occupancy;
  std::vector<bool> expected_counts;
  std::vector<std::uint32_t> expected_x, expected_y, expected_z;
  std::vector<std::uint32_t> expected_intensity;
};

inline TenPointCloud ten_point_cloud() {
  TenPointCloud f;
  auto add = [&](int id, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    GridPoint p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.attr.intensity = static_cast<std::uint16_t>(100 + 10 * id);
    p.attr.return_number = static_cast<std::uint8_t>(1 + id % 4);
    p.attr.number_of_returns = 4;
    p.attr.classification = static_cast<std::uint8_t>(1 + id % 7);
    p.attr.scan_angle_rank = static_cast<std::int8_t>(3 * id - 15);
    p.attr.user_data = static_cast<std::uint8_t>(id);
    p.attr.point_source_id = static_cast<std::uint16_t>(175 + id);
    p.attr.scan_direction_flag = id % 2 != 0;
    p.attr.edge_of_flight_line = id % 3 == 0;
    f.points.push_back(p);
  };
  add(1, 6, 0, 0);
  add(2, 5, 0, 0);
  add(3, 5, 0, 1);
  add(4, 5, 1, 6);
  add(5, 0, 0, 0);
  add(6, 3, 1, 1);
  add(7, 1, 3, 0);
  add(8, 1, 0, 3);
  add(9, 7, 7, 3);
  add(10, 4, 6, 7);

  f.config.k = 2;
  f.config.leaf_threshold = 3;

  f.expected_tree = {1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  f.expected_occupancy = {0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 0, 1, 0, 0, 0};
  f.expected_counts = {0, 0, 1, 1, 1, 1, 1, 1, 1, 1};
  f.expected_x = {1, 1, 2, 1, 3, 0, 0, 1, 1, 1};
  f.expected_y = {0, 0, 0, 1, 3, 2, 0, 0, 1, 1};
  f.expected_z = {0, 1, 0, 2, 3, 3, 0, 1, 0, 1};
  f.expected_intensity = {120, 130, 110, 140, 190, 200, 150, 180, 170, 160};
  return f;
}

inline PointAttributes random_pnoa_attributes(std::mt19937& rng) {
  std::uniform_int_distribution<int> intensity(0, 255);
  std::uniform_int_distribution<int> nret(1, 4);
  std::uniform_int_distribution<int> classification(1, 7);
  std::uniform_int_distribution<int> angle(-24, 28);
  std::uniform_int_distribution<int> source(175, 227);
  std::uniform_int_distribution<int> coin(0, 1);
  PointAttributes a;
  a.intensity = static_cast<std::uint16_t>(intensity(rng));
  a.number_of_returns = static_cast<std::uint8_t>(nret(rng));
  std::uniform_int_distribution<int> ret(1, a.number_of_returns);
  a.return_number = static_cast<std::uint8_t>(ret(rng));
  a.classification = static_cast<std::uint8_t>(classification(rng));
  a.scan_angle_rank = static_cast<std::int8_t>(angle(rng));
  a.user_data = 0;
  a.point_source_id = static_cast<std::uint16_t>(source(rng));
  a.scan_direction_flag = coin(rng) != 0;
  a.edge_of_flight_line = coin(rng) != 0;
  return a;
}

inline std::vector<GridPoint> uniform_cloud(std::size_t count,
                                            std::uint32_t extent,
                                            std::mt19937& rng) {
  std::uniform_int_distribution<std::uint32_t> coord(0, extent - 1);
  std::vector<GridPoint> pts(count);
  for (GridPoint& p : pts) {
    p.x = coord(rng);
    p.y = coord(rng);
    p.z = coord(rng);
    p.attr = random_pnoa_attributes(rng);
  }
  return pts;
}

// Gaussian clusters stretched along x, a rough stand-in for airborne strips.
inline std::vector<GridPoint> clustered_cloud(std::size_t count,
                                              std::uint32_t extent,
                                              std::mt19937& rng) {
  std::uniform_real_distribution<double> center(0.0, extent - 1.0);
  std::normal_distribution<double> across(0.0, extent / 64.0);
  std::normal_distribution<double> vertical(0.0, extent / 128.0);
  int n_clusters = 24;
  std::vector<std::array<double, 3>> centers(n_clusters);
  for (auto& c : centers) c = {center(rng), center(rng), center(rng)};

  auto clamp = [&](double v) {
    if (v < 0) return 0u;
    if (v > extent - 1) return extent - 1;
    return static_cast<std::uint32_t>(v);
  };
  std::uniform_int_distribution<int> pick(0, n_clusters - 1);
  std::uniform_real_distribution<double> along(-static_cast<double>(extent) / 8,
                                               static_cast<double>(extent) / 8);
  std::vector<GridPoint> pts(count);
  for (GridPoint& p : pts) {
    const auto& c = centers[pick(rng)];
    p.x = clamp(c[0] + along(rng));
    p.y = clamp(c[1] + across(rng));
    p.z = clamp(c[2] + vertical(rng));
    p.attr = random_pnoa_attributes(rng);
  }
  return pts;
}

inline Region random_region(std::uint32_t extent, std::mt19937& rng) {
  std::uniform_int_distribution<std::uint32_t> coord(0, extent - 1);
  auto pair = [&](std::uint32_t& lo, std::uint32_t& hi) {
    std::uint32_t a = coord(rng), b = coord(rng);
    lo = std::min(a, b);
    hi = std::max(a, b);
  };
  Region r;
  pair(r.x_lo, r.x_hi);
  pair(r.y_lo, r.y_hi);
  pair(r.z_lo, r.z_hi);
  return r;
}

// Airborne-survey-like synthetic cloud: ~0.5 points per square meter over a
// 2000 m x 1000 m area at centimeter resolution, terrain-shaped z. Grid
// extents (200000, 100000, <= 22000).
inline std::vector<GridPoint> pnoa_like_cloud(std::size_t count,
                                              std::mt19937& rng) {
  std::uniform_real_distribution<double> ux(0.0, 200000.0);
  std::uniform_real_distribution<double> uy(0.0, 100000.0);
  std::normal_distribution<double> jitter(0.0, 40.0);
  std::vector<GridPoint> pts(count);
  for (GridPoint& p : pts) {
    double x = ux(rng), y = uy(rng);
    double terrain = 9000.0 + 6000.0 * std::sin(x / 31000.0) +
                     4000.0 * std::cos(y / 17000.0) +
                     2000.0 * std::sin((x + y) / 9000.0);
    double z = terrain + jitter(rng);
    p.x = static_cast<std::uint32_t>(std::clamp(x, 0.0, 199999.0));
    p.y = static_cast<std::uint32_t>(std::clamp(y, 0.0, 99999.0));
    p.z = static_cast<std::uint32_t>(std::clamp(z, 0.0, 21999.0));
    p.attr = random_pnoa_attributes(rng);
  }
  return pts;
}

}  // namespace k3lidar::testing

#endif  // K3LIDAR_TESTS_FIXTURES_HPP
