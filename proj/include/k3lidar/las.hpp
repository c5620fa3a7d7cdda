#ifndef K3LIDAR_LAS_HPP
#define K3LIDAR_LAS_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "k3lidar/io.hpp"
#include "k3lidar/point.hpp"

namespace k3lidar {

// LAS ingestion/export restricted to Point Data Record Format 0 (the 20-byte
// base record). 1.2 and 1.4 headers are accepted; VLRs/EVLRs are skipped.

struct LasHeader {
  std::uint8_t version_major = 1;
  std::uint8_t version_minor = 2;
  std::uint32_t offset_to_point_data = 0;
  std::uint8_t point_data_record_format = 0;
  std::uint16_t point_record_length = 20;
  std::uint64_t point_count = 0;
  std::array<double, 3> scale = {0.01, 0.01, 0.01};
  std::array<double, 3> offset = {0.0, 0.0, 0.0};
  std::array<double, 3> min_bound = {0.0, 0.0, 0.0};
  std::array<double, 3> max_bound = {0.0, 0.0, 0.0};
};

// Raw (pre-transform) grid integers plus PDRF-0 attributes; exactly 20 bytes
// on disk.
struct PointRecord {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;
  PointAttributes attr;

  auto operator<=>(const PointRecord&) const = default;
};

struct LasData {
  LasHeader header;
  std::vector<PointRecord> points;
  // Records violating return_number <= number_of_returns (both nonzero) are
  // kept; real files contain them. The count lets callers warn.
  std::uint64_t return_count_warnings = 0;
};

namespace detail {

constexpr std::size_t LAS12_HEADER_SIZE = 227;

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
inline double get_f64(const unsigned char* p) {
  return std::bit_cast<double>(get_u64(p));
}

}  // namespace detail

inline LasData read_las(std::istream& is) {
  using namespace detail;
  std::vector<unsigned char> head(LAS12_HEADER_SIZE);
  is.read(reinterpret_cast<char*>(head.data()), LAS12_HEADER_SIZE);
  if (static_cast<std::size_t>(is.gcount()) != LAS12_HEADER_SIZE)
    throw std::runtime_error("LAS: truncated header");
  if (std::memcmp(head.data(), "LASF", 4) != 0)
    throw std::runtime_error("LAS: bad file signature");

  LasData data;
  LasHeader& h = data.header;
  h.version_major = head[24];
  h.version_minor = head[25];
  std::uint16_t header_size = get_u16(&head[94]);
  if (header_size < LAS12_HEADER_SIZE)
    throw std::runtime_error("LAS: header size too small");
  h.offset_to_point_data = get_u32(&head[96]);
  h.point_data_record_format = head[104];
  if (h.point_data_record_format != 0)
    throw std::runtime_error("LAS: only point data record format 0 is supported");
  h.point_record_length = get_u16(&head[105]);
  if (h.point_record_length < 20)
    throw std::runtime_error("LAS: point record length < 20");
  h.point_count = get_u32(&head[107]);
  for (int a = 0; a < 3; ++a) {
    h.scale[a] = get_f64(&head[131 + 8 * a]);
    h.offset[a] = get_f64(&head[155 + 8 * a]);
    h.max_bound[a] = get_f64(&head[179 + 16 * a]);
    h.min_bound[a] = get_f64(&head[187 + 16 * a]);
  }
  for (double s : h.scale)
    if (!(s > 0)) throw std::runtime_error("LAS: scale factors must be positive");

  std::size_t consumed = LAS12_HEADER_SIZE;
  if (header_size > LAS12_HEADER_SIZE) {
    std::vector<unsigned char> rest(header_size - LAS12_HEADER_SIZE);
    is.read(reinterpret_cast<char*>(rest.data()), static_cast<std::streamsize>(rest.size()));
    if (static_cast<std::size_t>(is.gcount()) != rest.size())
      throw std::runtime_error("LAS: truncated header");
    consumed = header_size;
    // The 1.4 64-bit record count supersedes the legacy field when set.
    if (h.version_minor >= 4 && header_size >= 375) {
      std::uint64_t count64 = get_u64(&rest[247 - LAS12_HEADER_SIZE]);
      if (count64 != 0) h.point_count = count64;
    }
  }

  if (h.offset_to_point_data < consumed)
    throw std::runtime_error("LAS: point data offset inside header");
  // Skip variable-length records.
  for (std::size_t skip = h.offset_to_point_data - consumed; skip > 0;) {
    char buf[4096];
    std::size_t n = std::min(skip, sizeof(buf));
    is.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
      throw std::runtime_error("LAS: truncated before point data");
    skip -= n;
  }

  data.points.resize(h.point_count);
  std::vector<unsigned char> rec(h.point_record_length);
  for (std::uint64_t i = 0; i < h.point_count; ++i) {
    is.read(reinterpret_cast<char*>(rec.data()), h.point_record_length);
    if (static_cast<std::size_t>(is.gcount()) != rec.size())
      throw std::runtime_error("LAS: truncated point data");
    PointRecord& p = data.points[i];
    p.x = static_cast<std::int32_t>(get_u32(&rec[0]));
    p.y = static_cast<std::int32_t>(get_u32(&rec[4]));
    p.z = static_cast<std::int32_t>(get_u32(&rec[8]));
    p.attr.intensity = get_u16(&rec[12]);
    std::uint8_t flags = rec[14];
    p.attr.return_number = flags & 0x07;
    p.attr.number_of_returns = (flags >> 3) & 0x07;
    p.attr.scan_direction_flag = (flags >> 6) & 1;
    p.attr.edge_of_flight_line = (flags >> 7) & 1;
    p.attr.classification = rec[15];
    p.attr.scan_angle_rank = static_cast<std::int8_t>(rec[16]);
    p.attr.user_data = rec[17];
    p.attr.point_source_id = get_u16(&rec[18]);
    if (p.attr.return_number != 0 && p.attr.number_of_returns != 0 &&
        p.attr.return_number > p.attr.number_of_returns)
      ++data.return_count_warnings;
  }
  return data;
}

inline void write_point_record(std::ostream& os, const PointRecord& p) {
  io::write_le<std::int32_t>(os, p.x);
  io::write_le<std::int32_t>(os, p.y);
  io::write_le<std::int32_t>(os, p.z);
  io::write_le<std::uint16_t>(os, p.attr.intensity);
  std::uint8_t flags =
      static_cast<std::uint8_t>((p.attr.return_number & 0x07) |
                                ((p.attr.number_of_returns & 0x07) << 3) |
                                (p.attr.scan_direction_flag ? 0x40 : 0) |
                                (p.attr.edge_of_flight_line ? 0x80 : 0));
  io::write_le<std::uint8_t>(os, flags);
  io::write_le<std::uint8_t>(os, p.attr.classification);
  io::write_le<std::int8_t>(os, p.attr.scan_angle_rank);
  io::write_le<std::uint8_t>(os, p.attr.user_data);
  io::write_le<std::uint16_t>(os, p.attr.point_source_id);
}

// Writes a LAS 1.2 / PDRF-0 file. Scale and offset come from the header
// argument; counts and bounds are recomputed from the records.
inline void write_las(std::ostream& os, const LasHeader& header,
                      const std::vector<PointRecord>& points) {
  using namespace detail;
  if (points.size() > std::numeric_limits<std::uint32_t>::max())
    throw std::runtime_error("LAS: too many points for a 1.2 file");

  std::array<double, 3> lo = {0, 0, 0}, hi = {0, 0, 0};
  bool first = true;
  for (const PointRecord& p : points) {
    std::array<std::int32_t, 3> raw = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      double real = raw[a] * header.scale[a] + header.offset[a];
      if (first || real < lo[a]) lo[a] = real;
      if (first || real > hi[a]) hi[a] = real;
    }
    first = false;
  }

  os.write("LASF", 4);
  io::write_le<std::uint16_t>(os, 0);  // file source id
  io::write_le<std::uint16_t>(os, 0);  // global encoding
  for (int i = 0; i < 16; ++i) io::write_le<std::uint8_t>(os, 0);  // GUID
  io::write_le<std::uint8_t>(os, 1);  // version 1.2
  io::write_le<std::uint8_t>(os, 2);
  char ident[32] = "k3lidar";
  os.write(ident, 32);  // system identifier
  os.write(ident, 32);  // generating software
  io::write_le<std::uint16_t>(os, 0);  // creation day of year
  io::write_le<std::uint16_t>(os, 0);  // creation year
  io::write_le<std::uint16_t>(os, LAS12_HEADER_SIZE);
  io::write_le<std::uint32_t>(os, LAS12_HEADER_SIZE);  // offset to point data
  io::write_le<std::uint32_t>(os, 0);                  // number of VLRs
  io::write_le<std::uint8_t>(os, 0);                   // PDRF 0
  io::write_le<std::uint16_t>(os, 20);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(points.size()));
  for (int i = 0; i < 5; ++i) io::write_le<std::uint32_t>(os, 0);  // by return
  for (int a = 0; a < 3; ++a) io::write_f64le(os, header.scale[a]);
  for (int a = 0; a < 3; ++a) io::write_f64le(os, header.offset[a]);
  for (int a = 0; a < 3; ++a) {
    io::write_f64le(os, hi[a]);
    io::write_f64le(os, lo[a]);
  }
  for (const PointRecord& p : points) write_point_record(os, p);
}

struct GridTransform {
  std::array<std::int32_t, 3> grid_offset = {0, 0, 0};  // per-axis raw minimum
  std::array<double, 3> scale = {0.01, 0.01, 0.01};
  std::array<double, 3> offset = {0.0, 0.0, 0.0};

  // real = scale * (converted + grid_offset) + offset
  double to_real(int axis, std::uint32_t converted) const {
    return scale[axis] * (static_cast<double>(converted) +
                          static_cast<double>(grid_offset[axis])) +
           offset[axis];
  }

  std::int32_t to_raw(int axis, std::uint32_t converted) const {
    return static_cast<std::int32_t>(static_cast<std::int64_t>(converted) +
                                     grid_offset[axis]);
  }
};

struct GridCloud {
  std::vector<GridPoint> points;
  GridTransform transform;
};

// Translate raw record coordinates so each axis starts at zero. The per-axis
// shift (the dataset minimum) is kept in the transform for reconstruction.
inline GridCloud to_grid(const std::vector<PointRecord>& records,
                         const LasHeader& header) {
  GridCloud cloud;
  cloud.transform.scale = header.scale;
  cloud.transform.offset = header.offset;
  if (records.empty()) return cloud;

  std::array<std::int32_t, 3> mins = {records[0].x, records[0].y, records[0].z};
  for (const PointRecord& r : records) {
    mins[0] = std::min(mins[0], r.x);
    mins[1] = std::min(mins[1], r.y);
    mins[2] = std::min(mins[2], r.z);
  }
  cloud.transform.grid_offset = mins;
  cloud.points.reserve(records.size());
  for (const PointRecord& r : records) {
    GridPoint p;
    p.x = static_cast<std::uint32_t>(static_cast<std::int64_t>(r.x) - mins[0]);
    p.y = static_cast<std::uint32_t>(static_cast<std::int64_t>(r.y) - mins[1]);
    p.z = static_cast<std::uint32_t>(static_cast<std::int64_t>(r.z) - mins[2]);
    p.attr = r.attr;
    cloud.points.push_back(p);
  }
  return cloud;
}

inline PointRecord to_record(const GridPoint& p, const GridTransform& t) {
  PointRecord r;
  r.x = t.to_raw(0, p.x);
  r.y = t.to_raw(1, p.y);
  r.z = t.to_raw(2, p.z);
  r.attr = p.attr;
  return r;
}

}  // namespace k3lidar

#endif  // K3LIDAR_LAS_HPP
