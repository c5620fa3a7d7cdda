#ifndef K3LIDAR_CLI_HPP
#define K3LIDAR_CLI_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "k3lidar/index.hpp"
#include "k3lidar/las.hpp"
#include "k3lidar/point.hpp"

namespace k3lidar::cli {

struct BuildArgs {
  std::string las_path;
  std::string index_path;
  std::uint32_t k = 2;
  std::uint32_t leaf_threshold = 100;
};

struct QueryArgs {
  std::string index_path;
  std::string region;                // "x1:y1:z1:x2:y2:z2"
  std::optional<std::string> attr;   // "NAME:LO:HI"
  bool real_coords = false;
  std::string format = "text";       // text | csv | las
  std::optional<std::string> output_path;
};

struct StatsArgs {
  std::string index_path;
};

struct ExportArgs {
  std::string index_path;
  std::string las_path;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

inline K3LidarIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return K3LidarIndex::deserialize(in);
}

inline std::uint32_t grid_limit(std::uint64_t n) {
  std::uint64_t hi = n - 1;
  std::uint64_t cap = std::numeric_limits<std::uint32_t>::max();
  return static_cast<std::uint32_t>(std::min(hi, cap));
}

inline std::uint32_t clamp_grid(double g, std::uint64_t n) {
  if (g < 0) return 0;
  std::uint32_t limit = grid_limit(n);
  if (g > static_cast<double>(limit)) return limit;
  return static_cast<std::uint32_t>(g);
}

// Region text is six ':'-separated numbers. Grid regions are integers; with
// --real they are real-world coordinates mapped through the stored transform
// (floor for the lower bound, ceil for the upper).
inline Region parse_region(const std::string& text, bool real,
                           const IndexConfig& config) {
  auto parts = split(text, ':');
  if (parts.size() != 6)
    throw std::runtime_error("region must be x1:y1:z1:x2:y2:z2");
  std::uint64_t n = config.side();
  std::uint32_t v[6];
  for (int i = 0; i < 6; ++i) {
    std::size_t used = 0;
    double d = std::stod(parts[i], &used);
    if (used != parts[i].size()) throw std::runtime_error("bad region value: " + parts[i]);
    if (real) {
      int axis = i % 3;
      const GridTransform& t = config.transform;
      double g = (d - t.offset[axis]) / t.scale[axis] -
                 static_cast<double>(t.grid_offset[axis]);
      v[i] = clamp_grid(i < 3 ? std::floor(g) : std::ceil(g), n);
    } else {
      if (d < 0 || d != std::floor(d))
        throw std::runtime_error("grid region values must be non-negative integers");
      v[i] = clamp_grid(d, n);
    }
  }
  return Region{v[0], v[1], v[2], v[3], v[4], v[5]};
}

inline AttributeFilter parse_filter(const std::string& text) {
  auto parts = split(text, ':');
  if (parts.size() != 3)
    throw std::runtime_error("attribute filter must be NAME:LO:HI");
  AttributeFilter f;
  f.attribute = attribute_from_name(parts[0]);
  f.lo = std::stoll(parts[1]);
  f.hi = std::stoll(parts[2]);
  if (f.lo > f.hi) throw std::runtime_error("attribute filter has LO > HI");
  return f;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void print_point(std::ostream& os, const GridPoint& p,
                        const GridTransform& t, bool real, char sep) {
  if (real) {
    os << format_real(t.to_real(0, p.x)) << sep << format_real(t.to_real(1, p.y))
       << sep << format_real(t.to_real(2, p.z));
  } else {
    os << p.x << sep << p.y << sep << p.z;
  }
  os << sep << p.attr.intensity << sep << +p.attr.return_number << sep
     << +p.attr.number_of_returns << sep << (p.attr.scan_direction_flag ? 1 : 0)
     << sep << (p.attr.edge_of_flight_line ? 1 : 0) << sep
     << +p.attr.classification << sep << +p.attr.scan_angle_rank << sep
     << +p.attr.user_data << sep << p.attr.point_source_id << '\n';
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

inline int cmd_build(const BuildArgs& args, std::ostream& out, std::ostream& err) {
  try {
    auto start = std::chrono::steady_clock::now();
    std::ifstream in(args.las_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + args.las_path);
    LasData las = read_las(in);
    if (las.return_count_warnings > 0)
      err << "warning: " << las.return_count_warnings
          << " records have return_number > number_of_returns\n";
    GridCloud cloud = to_grid(las.points, las.header);

    BuildConfig cfg;
    cfg.k = args.k;
    cfg.leaf_threshold = args.leaf_threshold;
    cfg.transform = cloud.transform;
    K3LidarIndex index = K3LidarIndex::build(cloud.points, cfg);

    std::ofstream os(args.index_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + args.index_path);
    index.serialize(os);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + args.index_path);

    IndexStats st = index.stats();
    out << "points " << st.point_count << "\n"
        << "index_bytes " << st.total_bytes << "\n"
        << "bits_per_point " << st.bits_per_point << "\n"
        << "elapsed_ms " << detail::elapsed_ms(start) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "build: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_query(const QueryArgs& args, std::ostream& out, std::ostream& err) {
  try {
    K3LidarIndex index = detail::load_index(args.index_path);
    Region region = detail::parse_region(args.region, args.real_coords, index.config);
    std::optional<AttributeFilter> filter;
    if (args.attr) filter = detail::parse_filter(*args.attr);

    auto start = std::chrono::steady_clock::now();
    std::vector<GridPoint> points = index.query(region, filter);
    double ms = detail::elapsed_ms(start);

    std::ofstream file_out;
    std::ostream* os = &out;
    if (args.output_path) {
      file_out.open(*args.output_path, std::ios::binary);
      if (!file_out) throw std::runtime_error("cannot write " + *args.output_path);
      os = &file_out;
    }

    const GridTransform& t = index.config.transform;
    if (args.format == "las") {
      if (!args.output_path)
        throw std::runtime_error("--format las needs -o PATH");
      std::vector<PointRecord> records;
      records.reserve(points.size());
      for (const GridPoint& p : points) records.push_back(to_record(p, t));
      LasHeader header;
      header.scale = t.scale;
      header.offset = t.offset;
      write_las(*os, header, records);
    } else if (args.format == "csv") {
      *os << "x,y,z,intensity,return_number,number_of_returns,"
             "scan_direction_flag,edge_of_flight_line,classification,"
             "scan_angle_rank,user_data,point_source_id\n";
      for (const GridPoint& p : points)
        detail::print_point(*os, p, t, args.real_coords, ',');
    } else if (args.format == "text") {
      for (const GridPoint& p : points)
        detail::print_point(*os, p, t, args.real_coords, ' ');
    } else {
      throw std::runtime_error("unknown format: " + args.format);
    }
    err << points.size() << " points in " << ms << " ms\n";
    return 0;
  } catch (const std::exception& e) {
    err << "query: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
  try {
    K3LidarIndex index = detail::load_index(args.index_path);
    IndexStats st = index.stats();
    out << "points " << st.point_count << "\n"
        << "tree_bits " << st.tree_bits << "\n"
        << "occupancy_bits " << st.occupancy_bits << "\n"
        << "count_bits " << st.count_bits << "\n"
        << "header_bytes " << st.header_bytes << "\n"
        << "tree_bytes " << st.tree_bytes << "\n"
        << "occupancy_bytes " << st.occupancy_bytes << "\n"
        << "counts_bytes " << st.counts_bytes << "\n"
        << "coordinate_bytes " << st.coordinate_bytes << "\n"
        << "attribute_bytes " << st.attribute_bytes << "\n"
        << "total_bytes " << st.total_bytes << "\n"
        << "bits_per_point " << st.bits_per_point << "\n"
        << "levels " << st.levels << "\n"
        << "depth_reached " << st.depth_reached << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "stats: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_export(const ExportArgs& args, std::ostream& out, std::ostream& err) {
  try {
    K3LidarIndex index = detail::load_index(args.index_path);
    std::uint32_t hi = detail::grid_limit(index.cube_side());
    Region full{0, 0, 0, hi, hi, hi};
    std::vector<GridPoint> points = index.get_region(full);

    const GridTransform& t = index.config.transform;
    std::vector<PointRecord> records;
    records.reserve(points.size());
    for (const GridPoint& p : points) records.push_back(to_record(p, t));

    LasHeader header;
    header.scale = t.scale;
    header.offset = t.offset;
    std::ofstream os(args.las_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + args.las_path);
    write_las(os, header, records);
    os.flush();
    if (!os) throw std::runtime_error("write failed: " + args.las_path);
    out << "points " << points.size() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "export: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace k3lidar::cli

#endif  // K3LIDAR_CLI_HPP
