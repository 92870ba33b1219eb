#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclesim/series.hpp"

namespace cyclesim::ingest {

inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
  std::int64_t timestamp_ms = 0;
  double lat = 0.0;  // degrees WGS84
  double lon = 0.0;  // degrees WGS84

  bool operator==(const GeoPoint&) const = default;
};

struct RideTrace {
  std::string ride_id;
  std::vector<GeoPoint> points;
  std::optional<std::vector<double>> speeds;  // recorded, one per point, m/s
  std::optional<std::string> region_tag;

  bool operator==(const RideTrace&) const = default;
};

enum class Defect {
  NonMonotonicTime,
  DuplicateTime,
  TeleportJump,
  TooShort,
  SpeedOutlier,
  IrregularSampling,
  InvalidCoordinate,
};

std::string_view to_string(Defect d) noexcept;
std::optional<Defect> defect_from_string(std::string_view name) noexcept;

struct ValidationConfig {
  double max_jump_speed = 40.0;      // m/s between consecutive fixes
  std::size_t min_points = 30;
  double min_duration_s = 60.0;
  double outlier_speed = 25.0;       // m/s
  std::size_t outlier_run = 3;       // consecutive intervals above outlier_speed
  double min_median_interval_s = 1.0;
  double max_median_interval_s = 10.0;
  std::set<Defect> fatal = {Defect::NonMonotonicTime, Defect::TeleportJump, Defect::TooShort,
                            Defect::SpeedOutlier, Defect::IrregularSampling,
                            Defect::InvalidCoordinate};

  bool operator==(const ValidationConfig&) const = default;
};

ValidationConfig parse_validation_config(std::string_view json_text);
std::string to_json(const ValidationConfig& cfg);

struct ValidationReport {
  bool accepted = false;
  std::vector<Defect> defects;  // each triggered code once, in enum order
  std::size_t points_kept = 0;     // points clean_trace() would keep
  std::size_t points_dropped = 0;  // points clean_trace() would drop

  bool operator==(const ValidationReport&) const = default;
};

/// Parses a ride file: a header block, a separator line of '=' characters,
/// an optional `app#version` line, then a CSV body whose header names at
/// least `lat`, `lon` and `timeStamp` (milliseconds). Rows without
/// coordinates (motion-sensor rows) are skipped. An optional `speed` column
/// is read as recorded speed when every geo row carries one.
///
/// `fallback_id` is used when the header block does not name the ride.
RideTrace parse_ride(std::string_view raw, std::string_view fallback_id = {});

/// Serializes in the layout accepted by parse_ride; parse_ride(write_ride(t))
/// reproduces t exactly (shortest round-trip float formatting).
std::string write_ride(const RideTrace& trace);

/// Pure: never mutates the trace; identical inputs give identical reports.
ValidationReport validate_trace(const RideTrace& trace, const ValidationConfig& rules = {});

/// Drops points whose timestamp does not advance past the previous kept
/// point (duplicates and out-of-order fixes).
RideTrace clean_trace(const RideTrace& trace);

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Time-domain Gaussian kernel smoother. Each output coordinate is the
/// weighted mean of all input coordinates with weights
/// exp(-dt^2 / (2 bandwidth^2)); timestamps are carried over unchanged.
std::vector<GeoPoint> gaussian_kernel_smooth(std::span<const GeoPoint> points,
                                             double bandwidth_s);

/// Single-pole low-pass: y0 = x0, yi = alpha*xi + (1 - alpha)*y(i-1).
std::vector<double> lowpass_velocity(std::span<const double> speeds, double alpha);

/// Haversine distance over elapsed time between consecutive fixes, placed
/// at interval midpoints (n - 1 values).
SpeedSeries derive_speeds(const RideTrace& trace);

}  // namespace cyclesim::ingest
