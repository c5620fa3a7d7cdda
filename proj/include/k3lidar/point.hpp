#ifndef K3LIDAR_POINT_HPP
#define K3LIDAR_POINT_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace k3lidar {

// Non-coordinate fields of a 20-byte point record, declaration order matches
// the CSV column order used by the CLI.
struct PointAttributes {
  std::uint16_t intensity = 0;
  std::uint8_t return_number = 0;       // 3 bits
  std::uint8_t number_of_returns = 0;   // 3 bits
  bool scan_direction_flag = false;
  bool edge_of_flight_line = false;
  std::uint8_t classification = 0;
  std::int8_t scan_angle_rank = 0;
  std::uint8_t user_data = 0;
  std::uint16_t point_source_id = 0;

  auto operator<=>(const PointAttributes&) const = default;
};

// A point in converted grid coordinates (non-negative, minimum at the origin).
struct GridPoint {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t z = 0;
  PointAttributes attr;

  auto operator<=>(const GridPoint&) const = default;
};

enum class Attribute : std::uint8_t {
  intensity = 0,
  return_number = 1,
  number_of_returns = 2,
  scan_direction_flag = 3,
  edge_of_flight_line = 4,
  classification = 5,
  scan_angle_rank = 6,
  user_data = 7,
  point_source_id = 8,
};

inline constexpr std::array<Attribute, 9> all_attributes = {
    Attribute::intensity,         Attribute::return_number,
    Attribute::number_of_returns, Attribute::scan_direction_flag,
    Attribute::edge_of_flight_line, Attribute::classification,
    Attribute::scan_angle_rank,   Attribute::user_data,
    Attribute::point_source_id,
};

inline std::string_view attribute_name(Attribute a) {
  switch (a) {
    case Attribute::intensity: return "intensity";
    case Attribute::return_number: return "return_number";
    case Attribute::number_of_returns: return "number_of_returns";
    case Attribute::scan_direction_flag: return "scan_direction_flag";
    case Attribute::edge_of_flight_line: return "edge_of_flight_line";
    case Attribute::classification: return "classification";
    case Attribute::scan_angle_rank: return "scan_angle_rank";
    case Attribute::user_data: return "user_data";
    case Attribute::point_source_id: return "point_source_id";
  }
  throw std::invalid_argument("unknown attribute id");
}

inline Attribute attribute_from_name(std::string_view name) {
  for (Attribute a : all_attributes)
    if (attribute_name(a) == name) return a;
  throw std::invalid_argument("unknown attribute: " + std::string(name));
}

// Signed values are zigzag-mapped before DAC encoding (DACs store unsigned).
inline std::uint32_t zigzag(std::int32_t v) {
  return v >= 0 ? static_cast<std::uint32_t>(v) * 2
                : static_cast<std::uint32_t>(-static_cast<std::int64_t>(v)) * 2 - 1;
}

inline std::int32_t unzigzag(std::uint32_t u) {
  return (u % 2 == 0) ? static_cast<std::int32_t>(u / 2)
                      : -static_cast<std::int32_t>((u + 1) / 2);
}

// Value of one attribute as a signed integer (scan_angle_rank is the only
// signed column; everything else is returned as-is).
inline std::int64_t attribute_value(const PointAttributes& a, Attribute which) {
  switch (which) {
    case Attribute::intensity: return a.intensity;
    case Attribute::return_number: return a.return_number;
    case Attribute::number_of_returns: return a.number_of_returns;
    case Attribute::scan_direction_flag: return a.scan_direction_flag ? 1 : 0;
    case Attribute::edge_of_flight_line: return a.edge_of_flight_line ? 1 : 0;
    case Attribute::classification: return a.classification;
    case Attribute::scan_angle_rank: return a.scan_angle_rank;
    case Attribute::user_data: return a.user_data;
    case Attribute::point_source_id: return a.point_source_id;
  }
  throw std::invalid_argument("unknown attribute id");
}

}  // namespace k3lidar

#endif  // K3LIDAR_POINT_HPP
