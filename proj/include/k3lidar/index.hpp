#ifndef K3LIDAR_INDEX_HPP
#define K3LIDAR_INDEX_HPP

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <deque>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "k3lidar/bitvector.hpp"
#include "k3lidar/dac.hpp"
#include "k3lidar/io.hpp"
#include "k3lidar/las.hpp"
#include "k3lidar/morton.hpp"
#include "k3lidar/point.hpp"

namespace k3lidar {

// Compact k-ary octree over integer-converted LiDAR points.
//
// The cube of side n = k^levels is subdivided into k^3 children per node
// until a submatrix is empty, holds at most leaf_threshold points, or reaches
// side 1. The topology lives in three bitvectors:
//   tree      - one bit per child of every subdivided node with side > 1
//               (1 = subdivided further), breadth-first, siblings x-major;
//   occupancy - one bit per tree-zero leaf (in tree position order) followed
//               by one bit per side-1 cell (breadth-first): 1 = holds points;
//   counts    - per non-empty leaf, its point count in unary
//               ((m-1) zeros then a 1), in occupancy order.
// Leaf-local coordinates go to DAC arrays (side-1 cells are skipped: their
// position is implied by the descent); every attribute column has one entry
// per point, in the same leaf order.

struct IndexConfig {
  std::uint32_t k = 2;
  std::uint32_t leaf_threshold = 100;
  std::uint8_t levels = 0;
  GridTransform transform;

  std::uint64_t side() const {
    std::uint64_t n = 1;
    for (std::uint8_t i = 0; i < levels; ++i) n *= k;
    return n;
  }

  bool operator==(const IndexConfig& other) const {
    return k == other.k && leaf_threshold == other.leaf_threshold &&
           levels == other.levels &&
           transform.grid_offset == other.transform.grid_offset &&
           transform.scale == other.transform.scale &&
           transform.offset == other.transform.offset;
  }
};

struct BuildConfig {
  std::uint32_t k = 2;
  std::uint32_t leaf_threshold = 100;
  // Cube side is k^levels when set; otherwise the smallest power of k
  // covering the data is used.
  std::optional<std::uint8_t> levels;
  GridTransform transform;
};

struct IndexTopology {
  BitVector tree;       // T
  BitVector occupancy;  // H
  BitVector counts;     // N

  bool operator==(const IndexTopology& other) const {
    return tree == other.tree && occupancy == other.occupancy &&
           counts == other.counts;
  }
};

struct LeafPayload {
  DacSequence local_x, local_y, local_z;
  DacSequence intensity;
  DacSequence return_number;
  DacSequence number_of_returns;
  DacSequence classification;
  DacSequence scan_angle;  // zigzag-mapped scan_angle_rank
  DacSequence user_data;
  DacSequence point_source_id;
  BitVector scan_direction;
  BitVector edge_of_flight;

  bool operator==(const LeafPayload& other) const {
    return local_x == other.local_x && local_y == other.local_y &&
           local_z == other.local_z && intensity == other.intensity &&
           return_number == other.return_number &&
           number_of_returns == other.number_of_returns &&
           classification == other.classification &&
           scan_angle == other.scan_angle && user_data == other.user_data &&
           point_source_id == other.point_source_id &&
           scan_direction == other.scan_direction &&
           edge_of_flight == other.edge_of_flight;
  }
};

// Inclusive box in converted grid coordinates.
struct Region {
  std::uint32_t x_lo = 0, y_lo = 0, z_lo = 0;
  std::uint32_t x_hi = 0, y_hi = 0, z_hi = 0;
};

struct AttributeFilter {
  Attribute attribute = Attribute::intensity;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct IndexStats {
  std::uint64_t point_count = 0;
  std::uint64_t tree_bits = 0;
  std::uint64_t occupancy_bits = 0;
  std::uint64_t count_bits = 0;
  std::uint64_t header_bytes = 0;
  std::uint64_t tree_bytes = 0;
  std::uint64_t occupancy_bytes = 0;
  std::uint64_t counts_bytes = 0;
  std::uint64_t coordinate_bytes = 0;
  std::uint64_t attribute_bytes = 0;
  std::uint64_t total_bytes = 0;
  double bits_per_point = 0.0;
  unsigned depth_reached = 0;
  unsigned levels = 0;
};

class K3LidarIndex {
 public:
  static constexpr char MAGIC[4] = {'K', '3', 'L', '1'};
  static constexpr std::uint16_t FORMAT_VERSION = 1;

  IndexConfig config;
  IndexTopology topo;
  LeafPayload payload;

  std::uint64_t point_count() const { return topo.counts.size(); }
  std::uint64_t cube_side() const { return config.side(); }

  // ------------------------------------------------------------------
  // Construction
  // ------------------------------------------------------------------

  static K3LidarIndex build(const std::vector<GridPoint>& points,
                            const BuildConfig& cfg) {
    if (cfg.k < 2 || cfg.k > 255)
      throw std::invalid_argument("build: k must be in [2, 255]");
    if (cfg.leaf_threshold < 1)
      throw std::invalid_argument("build: leaf threshold must be >= 1");
    if (points.size() > std::numeric_limits<std::uint32_t>::max())
      throw std::invalid_argument("build: too many points");

    std::uint32_t max_coord = 0;
    for (const GridPoint& p : points) {
      max_coord = std::max({max_coord, p.x, p.y, p.z});
      if (p.attr.return_number > 7 || p.attr.number_of_returns > 7)
        throw std::invalid_argument("build: return counts exceed 3 bits");
    }

    K3LidarIndex index;
    index.config.k = cfg.k;
    index.config.leaf_threshold = cfg.leaf_threshold;
    index.config.transform = cfg.transform;
    if (cfg.levels) {
      index.config.levels = *cfg.levels;
      if (!points.empty() && max_coord >= index.config.side())
        throw std::invalid_argument("build: coordinate outside the cube");
    } else {
      std::uint64_t n = 1;
      std::uint8_t levels = 0;
      while (n < static_cast<std::uint64_t>(max_coord) + 1) {
        n *= cfg.k;
        ++levels;
      }
      index.config.levels = levels;
    }

    Builder builder(index.config, points);
    builder.run();
    builder.finish(index);
    return index;
  }

  // ------------------------------------------------------------------
  // Queries
  // ------------------------------------------------------------------

  std::vector<GridPoint> get_region(const Region& region) const {
    return query(region, std::nullopt);
  }

  std::vector<GridPoint> filter_att_region(const Region& region,
                                           Attribute attribute,
                                           std::int64_t lo,
                                           std::int64_t hi) const {
    if (lo > hi)
      throw std::invalid_argument("filter_att_region: lo > hi");
    return query(region, AttributeFilter{attribute, lo, hi});
  }

  std::vector<GridPoint> query(const Region& region,
                               const std::optional<AttributeFilter>& filter) const {
    if (region.x_lo > region.x_hi || region.y_lo > region.y_hi ||
        region.z_lo > region.z_hi)
      throw std::invalid_argument("query: malformed region");

    std::vector<GridPoint> out;
    std::uint64_t n = cube_side();
    Box box{region.x_lo, region.y_lo, region.z_lo,
            region.x_hi, region.y_hi, region.z_hi};
    for (int a = 0; a < 3; ++a) box.hi[a] = std::min<std::uint64_t>(box.hi[a], n - 1);
    if (box.lo[0] > box.hi[0] || box.lo[1] > box.hi[1] || box.lo[2] > box.hi[2])
      return out;

    QueryContext ctx{filter, out};
    if (root_is_leaf()) {
      emit_leaf(0, {0, 0, 0}, config.levels == 0, box, ctx);
    } else {
      query_node(n, 0, box, {0, 0, 0}, ctx);
    }
    return out;
  }

  PointAttributes attributes_at(std::uint64_t ordinal) const {
    PointAttributes a;
    a.intensity = static_cast<std::uint16_t>(payload.intensity.access(ordinal));
    a.return_number =
        static_cast<std::uint8_t>(payload.return_number.access(ordinal));
    a.number_of_returns =
        static_cast<std::uint8_t>(payload.number_of_returns.access(ordinal));
    a.scan_direction_flag = payload.scan_direction[ordinal];
    a.edge_of_flight_line = payload.edge_of_flight[ordinal];
    a.classification =
        static_cast<std::uint8_t>(payload.classification.access(ordinal));
    a.scan_angle_rank =
        static_cast<std::int8_t>(unzigzag(payload.scan_angle.access(ordinal)));
    a.user_data = static_cast<std::uint8_t>(payload.user_data.access(ordinal));
    a.point_source_id =
        static_cast<std::uint16_t>(payload.point_source_id.access(ordinal));
    return a;
  }

  // ------------------------------------------------------------------
  // Serialization
  // ------------------------------------------------------------------

  void serialize(std::ostream& os) const {
    io::write_bytes(os, MAGIC, 4);
    io::write_le<std::uint16_t>(os, FORMAT_VERSION);
    io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(config.k));
    io::write_le<std::uint32_t>(os, config.leaf_threshold);
    io::write_le<std::uint8_t>(os, config.levels);
    for (int a = 0; a < 3; ++a)
      io::write_le<std::uint32_t>(
          os, static_cast<std::uint32_t>(config.transform.grid_offset[a]));
    for (int a = 0; a < 3; ++a) io::write_f64le(os, config.transform.scale[a]);
    for (int a = 0; a < 3; ++a) io::write_f64le(os, config.transform.offset[a]);
    topo.tree.serialize(os);
    topo.occupancy.serialize(os);
    topo.counts.serialize(os);
    payload.local_x.serialize(os);
    payload.local_y.serialize(os);
    payload.local_z.serialize(os);
    io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(all_attributes.size()));
    for (Attribute a : all_attributes) {
      io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(a));
      bool is_bit = a == Attribute::scan_direction_flag ||
                    a == Attribute::edge_of_flight_line;
      io::write_le<std::uint8_t>(os, is_bit ? 1 : 0);
      if (is_bit)
        bit_column(a).serialize(os);
      else
        dac_column(a).serialize(os);
    }
  }

  static K3LidarIndex deserialize(std::istream& is) {
    char magic[4];
    io::read_bytes(is, magic, 4);
    if (std::memcmp(magic, MAGIC, 4) != 0)
      throw std::runtime_error("index: bad magic");
    std::uint16_t version = io::read_le<std::uint16_t>(is);
    if (version != FORMAT_VERSION)
      throw std::runtime_error("index: unsupported format version");

    K3LidarIndex index;
    index.config.k = io::read_le<std::uint8_t>(is);
    index.config.leaf_threshold = io::read_le<std::uint32_t>(is);
    index.config.levels = io::read_le<std::uint8_t>(is);
    if (index.config.k < 2) throw std::runtime_error("index: corrupt header");
    std::uint64_t side = 1;
    for (std::uint8_t i = 0; i < index.config.levels; ++i) {
      side *= index.config.k;
      if (side > (1ULL << 40)) throw std::runtime_error("index: corrupt header");
    }
    for (int a = 0; a < 3; ++a)
      index.config.transform.grid_offset[a] =
          static_cast<std::int32_t>(io::read_le<std::uint32_t>(is));
    for (int a = 0; a < 3; ++a)
      index.config.transform.scale[a] = io::read_f64le(is);
    for (int a = 0; a < 3; ++a)
      index.config.transform.offset[a] = io::read_f64le(is);
    index.topo.tree = BitVector::deserialize(is);
    index.topo.occupancy = BitVector::deserialize(is);
    index.topo.counts = BitVector::deserialize(is);
    index.payload.local_x = DacSequence::deserialize(is);
    index.payload.local_y = DacSequence::deserialize(is);
    index.payload.local_z = DacSequence::deserialize(is);
    std::uint8_t n_columns = io::read_le<std::uint8_t>(is);
    for (std::uint8_t i = 0; i < n_columns; ++i) {
      std::uint8_t id = io::read_le<std::uint8_t>(is);
      std::uint8_t kind = io::read_le<std::uint8_t>(is);
      if (id >= all_attributes.size())
        throw std::runtime_error("index: unknown attribute column");
      Attribute a = static_cast<Attribute>(id);
      if (kind == 1)
        index.bit_column(a) = BitVector::deserialize(is);
      else if (kind == 0)
        index.dac_column(a) = DacSequence::deserialize(is);
      else
        throw std::runtime_error("index: unknown column kind");
    }
    return index;
  }

  bool operator==(const K3LidarIndex& other) const {
    return config == other.config && topo == other.topo &&
           payload == other.payload;
  }

  // ------------------------------------------------------------------
  // Statistics and structural checks
  // ------------------------------------------------------------------

  IndexStats stats() const {
    IndexStats s;
    s.point_count = point_count();
    s.tree_bits = topo.tree.size();
    s.occupancy_bits = topo.occupancy.size();
    s.count_bits = topo.counts.size();
    s.header_bytes = 4 + 2 + 1 + 4 + 1 + 12 + 48 + 1 + 2 * all_attributes.size();
    s.tree_bytes = topo.tree.serialized_size();
    s.occupancy_bytes = topo.occupancy.serialized_size();
    s.counts_bytes = topo.counts.serialized_size();
    s.coordinate_bytes = payload.local_x.serialized_size() +
                         payload.local_y.serialized_size() +
                         payload.local_z.serialized_size();
    for (Attribute a : all_attributes) {
      bool is_bit = a == Attribute::scan_direction_flag ||
                    a == Attribute::edge_of_flight_line;
      s.attribute_bytes +=
          is_bit ? bit_column(a).serialized_size() : dac_column(a).serialized_size();
    }
    s.total_bytes = s.header_bytes + s.tree_bytes + s.occupancy_bytes +
                    s.counts_bytes + s.coordinate_bytes + s.attribute_bytes;
    s.bits_per_point =
        s.point_count == 0
            ? 0.0
            : static_cast<double>(s.total_bytes) * 8.0 / s.point_count;
    s.levels = config.levels;
    s.depth_reached = depth_reached();
    return s;
  }

  // Verifies the cross-structure invariants; throws std::logic_error with a
  // description on the first violation.
  void check_invariants() const {
    std::uint64_t k3 = cube(config.k);
    if (topo.tree.size() % k3 != 0)
      throw std::logic_error("tree bit count is not a multiple of k^3");
    if (topo.counts.ones() != topo.occupancy.ones())
      throw std::logic_error("unary group count != occupied leaf count");

    WalkTotals totals;
    if (root_is_leaf()) {
      if (topo.occupancy.size() != 1)
        throw std::logic_error("leaf root must have a single occupancy bit");
      totals.leaves = 1;
      totals.points = leaf_count_at(0);
      if (config.levels == 0)
        totals.last_level_points = totals.points;
      else
        check_local_bounds(leaf_span(0), cube_side());
      totals.depth = 0;
    } else {
      totals.verify_bounds = true;
      totals.points = walk_count(cube_side(), 0, 1, totals);
      if (totals.points <= config.leaf_threshold && cube_side() > 1)
        throw std::logic_error("subdivided root holds <= threshold points");
    }
    if (totals.points != point_count())
      throw std::logic_error("unary counts do not sum to the point count");
    if (totals.leaves != topo.occupancy.size())
      throw std::logic_error("occupancy bit count != leaf count");
    std::uint64_t expect_xyz = totals.points - totals.last_level_points;
    if (payload.local_x.size() != expect_xyz ||
        payload.local_y.size() != expect_xyz ||
        payload.local_z.size() != expect_xyz)
      throw std::logic_error("coordinate arrays do not account for last-level points");
    for (Attribute a : all_attributes) {
      bool is_bit = a == Attribute::scan_direction_flag ||
                    a == Attribute::edge_of_flight_line;
      std::uint64_t len = is_bit ? bit_column(a).size() : dac_column(a).size();
      if (len != totals.points)
        throw std::logic_error("attribute column length != point count");
    }
  }

  const DacSequence& dac_column(Attribute a) const {
    return const_cast<K3LidarIndex*>(this)->dac_column(a);
  }
  const BitVector& bit_column(Attribute a) const {
    return const_cast<K3LidarIndex*>(this)->bit_column(a);
  }

 private:
  struct Box {
    std::uint64_t lo[3];
    std::uint64_t hi[3];

    Box(std::uint64_t x0, std::uint64_t y0, std::uint64_t z0, std::uint64_t x1,
        std::uint64_t y1, std::uint64_t z1)
        : lo{x0, y0, z0}, hi{x1, y1, z1} {}
  };

  struct QueryContext {
    const std::optional<AttributeFilter>& filter;
    std::vector<GridPoint>& out;
  };

  struct Origin {
    std::uint64_t x, y, z;
  };

  static std::uint64_t cube(std::uint64_t k) { return k * k * k; }

  bool root_is_leaf() const {
    return topo.tree.size() == 0 && topo.occupancy.size() == 1;
  }

  struct LeafSpan {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    std::uint64_t count() const { return end - begin; }
  };

  // Payload ordinal range of leaf h; empty when the leaf holds no points.
  LeafSpan leaf_span(std::uint64_t h) const {
    if (!topo.occupancy[h]) return {};
    std::uint64_t j = topo.occupancy.rank1(h + 1);
    std::uint64_t begin = j == 1 ? 0 : topo.counts.select1(j - 1) + 1;
    std::uint64_t end = topo.counts.select1(j) + 1;
    return {begin, end};
  }

  std::uint64_t leaf_count_at(std::uint64_t h) const {
    return leaf_span(h).count();
  }

  // Emits the points of leaf h (occupancy index). For side-1 cells the cell
  // coordinates are the point coordinates; otherwise leaf-local coordinates
  // are read from the DAC arrays and tested against the box (leaf-local).
  void emit_leaf(std::uint64_t h, Origin origin, bool last_level,
                 const Box& local_box, QueryContext& ctx) const {
    LeafSpan span = leaf_span(h);
    for (std::uint64_t p = span.begin; p < span.end; ++p) {
      GridPoint point;
      if (last_level) {
        point.x = static_cast<std::uint32_t>(origin.x);
        point.y = static_cast<std::uint32_t>(origin.y);
        point.z = static_cast<std::uint32_t>(origin.z);
      } else {
        std::uint32_t px = payload.local_x.access(p);
        std::uint32_t py = payload.local_y.access(p);
        std::uint32_t pz = payload.local_z.access(p);
        if (px < local_box.lo[0] || px > local_box.hi[0] ||
            py < local_box.lo[1] || py > local_box.hi[1] ||
            pz < local_box.lo[2] || pz > local_box.hi[2])
          continue;
        point.x = static_cast<std::uint32_t>(origin.x + px);
        point.y = static_cast<std::uint32_t>(origin.y + py);
        point.z = static_cast<std::uint32_t>(origin.z + pz);
      }
      if (ctx.filter) {
        std::int64_t v = column_value(ctx.filter->attribute, p);
        if (v < ctx.filter->lo || v > ctx.filter->hi) continue;
      }
      point.attr = attributes_at(p);
      ctx.out.push_back(point);
    }
  }

  std::int64_t column_value(Attribute a, std::uint64_t ordinal) const {
    switch (a) {
      case Attribute::scan_direction_flag:
        return payload.scan_direction[ordinal] ? 1 : 0;
      case Attribute::edge_of_flight_line:
        return payload.edge_of_flight[ordinal] ? 1 : 0;
      case Attribute::scan_angle_rank:
        return unzigzag(payload.scan_angle.access(ordinal));
      default:
        return dac_column(a).access(ordinal);
    }
  }

  // Top-down traversal over the children of one subdivided node. `box` is in
  // node-local coordinates, `base` is the node's global origin, and
  // `children_pos` the tree position of its first child.
  void query_node(std::uint64_t side, std::uint64_t children_pos,
                  const Box& box, Origin base, QueryContext& ctx) const {
    std::uint64_t k = config.k;
    std::uint64_t s = side / k;
    std::uint64_t tree_size = topo.tree.size();
    for (std::uint64_t cx = box.lo[0] / s; cx <= box.hi[0] / s; ++cx) {
      for (std::uint64_t cy = box.lo[1] / s; cy <= box.hi[1] / s; ++cy) {
        for (std::uint64_t cz = box.lo[2] / s; cz <= box.hi[2] / s; ++cz) {
          std::uint64_t c_pos = children_pos + (cx * k + cy) * k + cz;
          Box child_box(std::max(box.lo[0], cx * s) - cx * s,
                        std::max(box.lo[1], cy * s) - cy * s,
                        std::max(box.lo[2], cz * s) - cz * s,
                        std::min(box.hi[0], (cx + 1) * s - 1) - cx * s,
                        std::min(box.hi[1], (cy + 1) * s - 1) - cy * s,
                        std::min(box.hi[2], (cz + 1) * s - 1) - cz * s);
          Origin origin{base.x + cx * s, base.y + cy * s, base.z + cz * s};
          if (s != 1) {
            if (topo.tree[c_pos]) {
              std::uint64_t next = topo.tree.rank1(c_pos + 1) * cube(k);
              query_node(s, next, child_box, origin, ctx);
            } else {
              emit_leaf(topo.tree.rank0(c_pos), origin, false, child_box, ctx);
            }
          } else {
            std::uint64_t h = topo.tree.zeros() + (c_pos - tree_size);
            emit_leaf(h, origin, true, child_box, ctx);
          }
        }
      }
    }
  }

  struct WalkTotals {
    std::uint64_t points = 0;
    std::uint64_t last_level_points = 0;
    std::uint64_t leaves = 0;
    unsigned depth = 0;
    bool verify_bounds = false;
  };

  // Full sweep mirroring query_node; verifies the threshold property and
  // accumulates totals. Returns the subtree point count.
  std::uint64_t walk_count(std::uint64_t side, std::uint64_t children_pos,
                           unsigned depth, WalkTotals& totals) const {
    std::uint64_t k = config.k;
    std::uint64_t s = side / k;
    std::uint64_t node_points = 0;
    totals.depth = std::max(totals.depth, depth);
    for (std::uint64_t c = 0; c < cube(k); ++c) {
      std::uint64_t c_pos = children_pos + c;
      if (s != 1) {
        if (topo.tree[c_pos]) {
          std::uint64_t sub = walk_count(
              s, topo.tree.rank1(c_pos + 1) * cube(k), depth + 1, totals);
          if (sub <= config.leaf_threshold)
            throw std::logic_error("subdivided node holds <= threshold points");
          node_points += sub;
        } else {
          LeafSpan span = leaf_span(topo.tree.rank0(c_pos));
          if (span.count() > config.leaf_threshold)
            throw std::logic_error("stored leaf exceeds the threshold");
          if (totals.verify_bounds) check_local_bounds(span, s);
          ++totals.leaves;
          node_points += span.count();
        }
      } else {
        std::uint64_t h = topo.tree.zeros() + (c_pos - topo.tree.size());
        std::uint64_t m = leaf_count_at(h);
        ++totals.leaves;
        totals.last_level_points += m;
        node_points += m;
      }
    }
    return node_points;
  }

  unsigned depth_reached() const {
    if (root_is_leaf() || point_count() == 0) {
      return 0;
    }
    WalkTotals totals;
    walk_count(cube_side(), 0, 1, totals);
    return totals.depth;
  }

  void check_local_bounds(LeafSpan span, std::uint64_t leaf_side) const {
    for (std::uint64_t p = span.begin; p < span.end; ++p) {
      if (payload.local_x.access(p) >= leaf_side ||
          payload.local_y.access(p) >= leaf_side ||
          payload.local_z.access(p) >= leaf_side)
        throw std::logic_error("leaf-local coordinate exceeds the leaf side");
    }
  }

  DacSequence& dac_column(Attribute a) {
    switch (a) {
      case Attribute::intensity: return payload.intensity;
      case Attribute::return_number: return payload.return_number;
      case Attribute::number_of_returns: return payload.number_of_returns;
      case Attribute::classification: return payload.classification;
      case Attribute::scan_angle_rank: return payload.scan_angle;
      case Attribute::user_data: return payload.user_data;
      case Attribute::point_source_id: return payload.point_source_id;
      default: throw std::invalid_argument("not a DAC-backed attribute");
    }
  }

  BitVector& bit_column(Attribute a) {
    switch (a) {
      case Attribute::scan_direction_flag: return payload.scan_direction;
      case Attribute::edge_of_flight_line: return payload.edge_of_flight;
      default: throw std::invalid_argument("not a bit-backed attribute");
    }
  }

  // ------------------------------------------------------------------
  // Breadth-first construction
  // ------------------------------------------------------------------

  class Builder {
   public:
    Builder(const IndexConfig& config, const std::vector<GridPoint>& points)
        : config_(config), points_(points) {}

    void run() {
      std::uint64_t n = config_.side();
      std::vector<std::uint32_t> all(points_.size());
      for (std::size_t i = 0; i < points_.size(); ++i)
        all[i] = static_cast<std::uint32_t>(i);

      if (n == 1) {
        last_level_cells_.push_back({{0, 0, 0}, 1, std::move(all)});
        return;
      }
      if (points_.size() <= config_.leaf_threshold) {
        tzero_leaves_.push_back({{0, 0, 0}, n, std::move(all)});
        return;
      }

      std::deque<Node> queue;
      queue.push_back({{0, 0, 0}, n, std::move(all)});
      std::uint64_t k = config_.k;
      std::uint64_t k3 = cube(k);
      while (!queue.empty()) {
        Node node = std::move(queue.front());
        queue.pop_front();
        std::uint64_t s = node.side / k;
        std::vector<std::vector<std::uint32_t>> buckets(k3);
        for (std::uint32_t idx : node.pts) {
          const GridPoint& p = points_[idx];
          std::uint64_t cx = (p.x - node.origin.x) / s;
          std::uint64_t cy = (p.y - node.origin.y) / s;
          std::uint64_t cz = (p.z - node.origin.z) / s;
          buckets[(cx * k + cy) * k + cz].push_back(idx);
        }
        for (std::uint64_t c = 0; c < k3; ++c) {
          Origin origin{node.origin.x + (c / (k * k)) * s,
                        node.origin.y + ((c / k) % k) * s,
                        node.origin.z + (c % k) * s};
          if (s == 1) {
            last_level_cells_.push_back({origin, 1, std::move(buckets[c])});
          } else if (buckets[c].size() > config_.leaf_threshold) {
            tree_bits_.push_back(true);
            queue.push_back({origin, s, std::move(buckets[c])});
          } else {
            tree_bits_.push_back(false);
            tzero_leaves_.push_back({origin, s, std::move(buckets[c])});
          }
        }
      }
    }

    void finish(K3LidarIndex& index) {
      for (bool b : tree_bits_) index.topo.tree.push_back(b);
      tree_bits_.clear();

      std::vector<std::uint32_t> xs, ys, zs;
      Columns cols;
      for (Node& leaf : tzero_leaves_) append_leaf(index, leaf, false, xs, ys, zs, cols);
      for (Node& cell : last_level_cells_) append_leaf(index, cell, true, xs, ys, zs, cols);

      index.topo.tree.build_index();
      index.topo.occupancy.build_index();
      index.topo.counts.build_index();
      index.payload.local_x = DacSequence::encode_auto(xs);
      index.payload.local_y = DacSequence::encode_auto(ys);
      index.payload.local_z = DacSequence::encode_auto(zs);
      index.payload.intensity = DacSequence::encode_auto(cols.intensity);
      index.payload.return_number = DacSequence::encode_auto(cols.return_number);
      index.payload.number_of_returns =
          DacSequence::encode_auto(cols.number_of_returns);
      index.payload.classification = DacSequence::encode_auto(cols.classification);
      index.payload.scan_angle = DacSequence::encode_auto(cols.scan_angle);
      index.payload.user_data = DacSequence::encode_auto(cols.user_data);
      index.payload.point_source_id =
          DacSequence::encode_auto(cols.point_source_id);
      index.payload.scan_direction = std::move(cols.scan_direction);
      index.payload.edge_of_flight = std::move(cols.edge_of_flight);
      index.payload.scan_direction.build_index();
      index.payload.edge_of_flight.build_index();
    }

   private:
    struct Node {
      Origin origin;
      std::uint64_t side;
      std::vector<std::uint32_t> pts;
    };

    struct Columns {
      std::vector<std::uint32_t> intensity, return_number, number_of_returns,
          classification, scan_angle, user_data, point_source_id;
      BitVector scan_direction, edge_of_flight;
    };

    void append_leaf(K3LidarIndex& index, Node& leaf, bool last_level,
                     std::vector<std::uint32_t>& xs,
                     std::vector<std::uint32_t>& ys,
                     std::vector<std::uint32_t>& zs, Columns& cols) {
      index.topo.occupancy.push_back(!leaf.pts.empty());
      if (leaf.pts.empty()) return;
      index.topo.counts.push_unary(leaf.pts.size());
      // Leaf-internal order is the z-order of local coordinates; stable sort
      // keeps input order for coincident points.
      std::stable_sort(leaf.pts.begin(), leaf.pts.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return local_morton(leaf, a) < local_morton(leaf, b);
                       });
      for (std::uint32_t idx : leaf.pts) {
        const GridPoint& p = points_[idx];
        if (!last_level) {
          xs.push_back(static_cast<std::uint32_t>(p.x - leaf.origin.x));
          ys.push_back(static_cast<std::uint32_t>(p.y - leaf.origin.y));
          zs.push_back(static_cast<std::uint32_t>(p.z - leaf.origin.z));
        }
        cols.intensity.push_back(p.attr.intensity);
        cols.return_number.push_back(p.attr.return_number);
        cols.number_of_returns.push_back(p.attr.number_of_returns);
        cols.classification.push_back(p.attr.classification);
        cols.scan_angle.push_back(zigzag(p.attr.scan_angle_rank));
        cols.user_data.push_back(p.attr.user_data);
        cols.point_source_id.push_back(p.attr.point_source_id);
        cols.scan_direction.push_back(p.attr.scan_direction_flag);
        cols.edge_of_flight.push_back(p.attr.edge_of_flight_line);
      }
    }

    unsigned __int128 local_morton(const Node& leaf, std::uint32_t idx) const {
      const GridPoint& p = points_[idx];
      return morton_key(static_cast<std::uint32_t>(p.x - leaf.origin.x),
                        static_cast<std::uint32_t>(p.y - leaf.origin.y),
                        static_cast<std::uint32_t>(p.z - leaf.origin.z));
    }

    const IndexConfig& config_;
    const std::vector<GridPoint>& points_;
    std::vector<bool> tree_bits_;
    std::vector<Node> tzero_leaves_;
    std::vector<Node> last_level_cells_;
  };
};

}  // namespace k3lidar

#endif  // K3LIDAR_INDEX_HPP
