#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyclesim/series.hpp"
#include "cyclesim/trace_ingest.hpp"

namespace cyclesim::kinematics {

/// Gating rules for acceleration maneuvers.
///
/// A candidate episode is a maximal run of samples whose finite-difference
/// acceleration exceeds `episode_floor`; runs separated by less than `merge_gap_s`
/// are joined. An episode is kept when the samples at or above `a_min` span
/// at least `t_min` seconds, its speed gain is at least `dv_min`, and its
/// peak acceleration does not exceed `a_artifact`.
///
/// Because episode boundaries do not depend on `a_min`, raising `a_min`
/// can only remove maneuvers, never split one into two. The floor sits
/// just above zero so the decaying tail of a low-pass filter after a ramp
/// does not bridge a plateau into the next ramp.
struct ManeuverConfig {
  double a_min = 0.05;       // m/s^2
  double t_min = 3.0;        // s
  double dv_min = 1.0;       // m/s
  double merge_gap_s = 2.0;  // s
  double a_artifact = 4.0;   // m/s^2
  double episode_floor = 0.02;  // m/s^2

  bool operator==(const ManeuverConfig&) const = default;
};

struct AccelerationManeuver {
  std::string ride_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  double v_start = 0.0;  // m/s
  double v_end = 0.0;    // m/s
  double a_max = 0.0;    // m/s^2, peak of the smoothed acceleration

  bool operator==(const AccelerationManeuver&) const = default;
};

struct RideKinematics {
  std::string ride_id;
  double v_max = 0.0;
  std::vector<AccelerationManeuver> maneuvers;

  bool operator==(const RideKinematics&) const = default;
};

struct AnalysisConfig {
  double lowpass_alpha = 0.4;
  ManeuverConfig maneuvers;
};

/// Centred differences in the interior, one-sided at both ends.
std::vector<double> finite_difference_acceleration(const SpeedSeries& series);

std::vector<AccelerationManeuver> extract_acceleration_maneuvers(const SpeedSeries& series,
                                                                 const ManeuverConfig& cfg = {},
                                                                 std::string_view ride_id = {});

double max_velocity(std::span<const double> speeds);

enum class Threshold {
  AtLeast,  // v >= threshold ("1.2 m/s^2 or higher")
  Above,    // v >  threshold ("a higher maximum velocity")
};

double fraction_above(std::span<const double> values, double threshold,
                      Threshold mode = Threshold::AtLeast);

/// Pearson correlation coefficient.
double correlation(std::span<const double> a, std::span<const double> b);

/// Speeds for one ride (recorded if present, otherwise derived from fixes),
/// low-passed, then reduced to v_max and maneuvers.
RideKinematics analyze_ride(const ingest::RideTrace& trace, const AnalysisConfig& cfg = {});

SpeedSeries speed_series(const ingest::RideTrace& trace);

}  // namespace cyclesim::kinematics
