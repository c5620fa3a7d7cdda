#include "k3lidar/index.hpp"

#include <doctest.h>

#include <random>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "k3lidar/oracle.hpp"

using namespace k3lidar;
using k3lidar::testing::ten_point_cloud;

namespace {

std::vector<bool> bits_of(const BitVector& bv) {
  std::vector<bool> out(bv.size());
  for (std::uint64_t i = 0; i < bv.size(); ++i) out[i] = bv[i];
  return out;
}

std::string serialized(const K3LidarIndex& index) {
  std::stringstream ss;
  index.serialize(ss);
  return ss.str();
}

Region full_cube(const K3LidarIndex& index) {
  auto hi = static_cast<std::uint32_t>(index.cube_side() - 1);
  return Region{0, 0, 0, hi, hi, hi};
}

}  // namespace

TEST_CASE("ten-point cloud builds the expected compact structure") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  index.check_invariants();

  CHECK(index.config.levels == 3);
  CHECK(index.cube_side() == 8);
  CHECK(bits_of(index.topo.tree) == f.expected_tree);
  CHECK(bits_of(index.topo.occupancy) == f.expected_occupancy);
  CHECK(bits_of(index.topo.counts) == f.expected_counts);
  CHECK(index.payload.local_x.decode_all() == f.expected_x);
  CHECK(index.payload.local_y.decode_all() == f.expected_y);
  CHECK(index.payload.local_z.decode_all() == f.expected_z);
  CHECK(index.payload.intensity.decode_all() == f.expected_intensity);
}

TEST_CASE("ten-point cloud: full-cube query returns every point with attributes") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  auto got = index.get_region(full_cube(index));
  CHECK(same_multiset(got, f.points));
}

TEST_CASE("ten-point cloud: the empty octant yields nothing") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  CHECK(index.get_region({0, 0, 4, 3, 3, 7}).empty());
}

TEST_CASE("empty cloud degenerates to an unoccupied root leaf") {
  K3LidarIndex index = K3LidarIndex::build({}, {});
  index.check_invariants();
  CHECK(index.topo.tree.size() == 0);
  CHECK(index.topo.occupancy.size() == 1);
  CHECK(index.topo.occupancy[0] == false);
  CHECK(index.topo.counts.size() == 0);
  CHECK(index.payload.local_x.size() == 0);
  CHECK(index.point_count() == 0);
  CHECK(index.get_region({0, 0, 0, 9, 9, 9}).empty());
}

TEST_CASE("at most threshold points make the root a stored leaf") {
  std::mt19937 rng(8);
  auto pts = testing::uniform_cloud(60, 300, rng);
  BuildConfig cfg;
  cfg.leaf_threshold = 100;
  K3LidarIndex index = K3LidarIndex::build(pts, cfg);
  index.check_invariants();
  CHECK(index.topo.tree.size() == 0);
  CHECK(index.topo.occupancy.size() == 1);
  CHECK(index.topo.occupancy[0] == true);
  CHECK(index.point_count() == 60);
  // Root leaf stores local == global coordinates.
  auto xs = index.payload.local_x.decode_all();
  std::vector<std::uint32_t> want;
  for (const auto& p : pts) want.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  std::sort(want.begin(), want.end());
  CHECK(xs == want);
  CHECK(same_multiset(index.get_region(full_cube(index)), pts));
}

TEST_CASE("build rejects out-of-range inputs") {
  GridPoint p;
  p.x = 70;
  BuildConfig cfg;
  cfg.levels = 6;  // cube side 64 with k=2
  CHECK_THROWS_AS(K3LidarIndex::build({p}, cfg), std::invalid_argument);

  GridPoint bad;
  bad.attr.return_number = 9;
  CHECK_THROWS_AS(K3LidarIndex::build({bad}, {}), std::invalid_argument);

  BuildConfig small_k;
  small_k.k = 1;
  CHECK_THROWS_AS(K3LidarIndex::build({p}, small_k), std::invalid_argument);
}

TEST_CASE("random clouds agree with the scan oracle") {
  std::mt19937 rng(1001);
  for (int round = 0; round < 4; ++round) {
    auto pts = round % 2 == 0 ? testing::uniform_cloud(5000, 1024, rng)
                              : testing::clustered_cloud(5000, 1024, rng);
    BuildConfig cfg;
    cfg.k = round < 2 ? 2 : 4;
    cfg.leaf_threshold = round % 2 == 0 ? 100 : 13;
    K3LidarIndex index = K3LidarIndex::build(pts, cfg);
    index.check_invariants();
    FlatStore store{pts};
    for (int q = 0; q < 100; ++q) {
      Region r = testing::random_region(1024, rng);
      CHECK(same_multiset(index.get_region(r), store.scan_region(r)));
    }
  }
}

TEST_CASE("attribute-filtered queries agree with the oracle") {
  std::mt19937 rng(2002);
  auto pts = testing::uniform_cloud(4000, 512, rng);
  BuildConfig cfg;
  cfg.leaf_threshold = 50;
  K3LidarIndex index = K3LidarIndex::build(pts, cfg);
  FlatStore store{pts};

  std::uniform_int_distribution<int> intensity(-10, 270);
  for (int q = 0; q < 100; ++q) {
    Region r = testing::random_region(512, rng);
    int a = intensity(rng), b = intensity(rng);
    std::int64_t lo = std::min(a, b), hi = std::max(a, b);
    CHECK(same_multiset(
        index.filter_att_region(r, Attribute::intensity, lo, hi),
        store.scan_filter(r, Attribute::intensity, lo, hi)));
  }

  // Signed and single-bit columns go through the same path.
  for (Attribute a : {Attribute::scan_angle_rank, Attribute::scan_direction_flag,
                      Attribute::classification}) {
    Region r = testing::random_region(512, rng);
    CHECK(same_multiset(index.filter_att_region(r, a, -5, 5),
                        store.scan_filter(r, a, -5, 5)));
  }
}

TEST_CASE("a non-restrictive filter equals the unfiltered query") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  Region full = full_cube(index);
  CHECK(same_multiset(
      index.filter_att_region(full, Attribute::intensity, 110, 200),
      index.get_region(full)));
  CHECK(index.filter_att_region(full, Attribute::intensity, 500, 900).empty());
  CHECK_THROWS_AS(index.filter_att_region(full, Attribute::intensity, 9, 3),
                  std::invalid_argument);
}

TEST_CASE("serialization round-trips the ten-point index") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  std::string bytes = serialized(index);
  std::stringstream ss(bytes);
  K3LidarIndex back = K3LidarIndex::deserialize(ss);
  CHECK(back == index);
  CHECK(serialized(back) == bytes);
  CHECK(same_multiset(back.get_region(full_cube(back)),
                      index.get_region(full_cube(index))));
}

TEST_CASE("serialization round-trips the empty index") {
  K3LidarIndex index = K3LidarIndex::build({}, {});
  std::string bytes = serialized(index);
  std::stringstream ss(bytes);
  CHECK(K3LidarIndex::deserialize(ss) == index);
}

TEST_CASE("deserialize rejects corrupt streams") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  std::string bytes = serialized(index);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream s1(bad_magic);
  CHECK_THROWS_WITH_AS(K3LidarIndex::deserialize(s1),
                       doctest::Contains("magic"), std::runtime_error);

  std::string bad_version = bytes;
  bad_version[4] = 99;
  std::stringstream s2(bad_version);
  CHECK_THROWS_WITH_AS(K3LidarIndex::deserialize(s2),
                       doctest::Contains("version"), std::runtime_error);

  std::stringstream s3(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_WITH_AS(K3LidarIndex::deserialize(s3),
                       doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("every strict prefix of a serialized index fails to load") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  std::string bytes = serialized(index);
  for (std::size_t len = 0; len < bytes.size(); ++len) {
    std::stringstream ss(bytes.substr(0, len));
    CHECK_THROWS_AS(K3LidarIndex::deserialize(ss), std::runtime_error);
  }
}

TEST_CASE("filters on every attribute column agree with the oracle") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  FlatStore store{f.points};
  Region full = full_cube(index);
  for (Attribute a : all_attributes) {
    std::vector<std::int64_t> values;
    for (const auto& p : f.points) values.push_back(attribute_value(p.attr, a));
    std::sort(values.begin(), values.end());
    for (auto [lo, hi] : {std::pair<std::int64_t, std::int64_t>{values.front(), values.back()},
                          {values[2], values[6]},
                          {values.back() + 1, values.back() + 10}}) {
      CAPTURE(attribute_name(a));
      CHECK(same_multiset(index.filter_att_region(full, a, lo, hi),
                          store.scan_filter(full, a, lo, hi)));
    }
  }
}

TEST_CASE("raising the threshold never lengthens the tree bitmap") {
  std::mt19937 rng(31);
  auto pts = testing::clustered_cloud(3000, 256, rng);
  std::uint64_t prev = ~0ULL;
  for (std::uint32_t l : {5u, 20u, 80u, 320u}) {
    BuildConfig cfg;
    cfg.leaf_threshold = l;
    K3LidarIndex index = K3LidarIndex::build(pts, cfg);
    CHECK(index.topo.tree.size() <= prev);
    prev = index.topo.tree.size();
  }
}

TEST_CASE("a crowded k-sided cube goes straight to side-1 cells") {
  // levels == 1: the root subdivides but contributes no tree bits, so the
  // occupancy bitmap alone addresses the k^3 cells.
  for (std::uint32_t k : {2u, 3u}) {
    std::mt19937 rng(60 + k);
    std::uniform_int_distribution<std::uint32_t> coord(0, k - 1);
    std::vector<GridPoint> pts(50);
    for (auto& p : pts) {
      p.x = coord(rng);
      p.y = coord(rng);
      p.z = coord(rng);
      p.attr.intensity = static_cast<std::uint16_t>(rng() % 256);
    }
    BuildConfig cfg;
    cfg.k = k;
    cfg.leaf_threshold = 4;
    K3LidarIndex index = K3LidarIndex::build(pts, cfg);
    index.check_invariants();
    CHECK(index.config.levels == 1);
    CHECK(index.topo.tree.size() == 0);
    CHECK(index.topo.occupancy.size() == k * k * k);
    CHECK(index.payload.local_x.size() == 0);
    FlatStore store{pts};
    for (std::uint32_t x0 = 0; x0 < k; ++x0)
      for (std::uint32_t y1 = 0; y1 < k; ++y1) {
        Region r{x0, 0, 0, x0, y1, k - 1};
        CHECK(same_multiset(index.get_region(r), store.scan_region(r)));
      }
    CHECK(same_multiset(index.get_region(full_cube(index)), pts));
  }
}

TEST_CASE("exhaustive boxes on a 4-sided cube with threshold 1") {
  // n = 4, levels = 2: subdivided interior nodes spawn side-1 cells through
  // tree one-bits rather than from the root.
  std::mt19937 rng(71);
  std::uniform_int_distribution<std::uint32_t> coord(0, 3);
  std::vector<GridPoint> pts(24);
  for (auto& p : pts) {
    p.x = coord(rng);
    p.y = coord(rng);
    p.z = coord(rng);
    p.attr.intensity = static_cast<std::uint16_t>(rng() % 256);
  }
  pts[1] = pts[0];
  BuildConfig cfg;
  cfg.leaf_threshold = 1;
  K3LidarIndex index = K3LidarIndex::build(pts, cfg);
  index.check_invariants();
  CHECK(index.config.levels == 2);
  FlatStore store{pts};
  for (std::uint32_t x0 = 0; x0 < 4; ++x0)
    for (std::uint32_t x1 = x0; x1 < 4; ++x1)
      for (std::uint32_t y0 = 0; y0 < 4; ++y0)
        for (std::uint32_t y1 = y0; y1 < 4; ++y1)
          for (std::uint32_t z0 = 0; z0 < 4; ++z0)
            for (std::uint32_t z1 = z0; z1 < 4; ++z1) {
              Region r{x0, y0, z0, x1, y1, z1};
              CHECK(same_multiset(index.get_region(r), store.scan_region(r)));
            }
}

TEST_CASE("coincident points past the threshold pile up in a side-1 cell") {
  std::vector<GridPoint> pts(40);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i].x = 9;
    pts[i].y = 2;
    pts[i].z = 13;
    pts[i].attr.intensity = static_cast<std::uint16_t>(i);
  }
  BuildConfig cfg;
  cfg.leaf_threshold = 4;
  K3LidarIndex index = K3LidarIndex::build(pts, cfg);
  index.check_invariants();
  CHECK(index.payload.local_x.size() == 0);  // all points sit at the last level
  auto got = index.get_region({9, 2, 13, 9, 2, 13});
  CHECK(same_multiset(got, pts));
  CHECK(index.get_region({0, 0, 0, 8, 15, 15}).empty());
}

TEST_CASE("stats reports the tabulated quantities") {
  K3LidarIndex empty = K3LidarIndex::build({}, {});
  IndexStats es = empty.stats();
  CHECK(es.point_count == 0);
  CHECK(es.tree_bits == 0);
  CHECK(es.depth_reached == 0);

  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  IndexStats st = index.stats();
  CHECK(st.point_count == 10);
  CHECK(st.tree_bits == 16);
  CHECK(st.occupancy_bits == 15);
  CHECK(st.count_bits == 10);
  CHECK(st.depth_reached == 2);
  CHECK(st.levels == 3);
  CHECK(st.total_bytes == serialized(index).size());
  CHECK(st.bits_per_point == doctest::Approx(st.total_bytes * 8.0 / 10));
}

TEST_CASE("queries are pure: repeated calls give identical answers") {
  auto f = ten_point_cloud();
  K3LidarIndex index = K3LidarIndex::build(f.points, f.config);
  Region r{1, 0, 0, 6, 5, 6};
  auto first = index.get_region(r);
  auto second = index.get_region(r);
  CHECK(first == second);
}
