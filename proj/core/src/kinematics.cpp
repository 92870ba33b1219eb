#include "cyclesim/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "cyclesim/error.hpp"

namespace cyclesim::kinematics {

std::vector<double> finite_difference_acceleration(const SpeedSeries& s) {
  const auto n = s.size();
  std::vector<double> a(n, 0.0);
  if (n < 2) return a;
  a[0] = (s.speed[1] - s.speed[0]) / (s.time_s[1] - s.time_s[0]);
  a[n - 1] = (s.speed[n - 1] - s.speed[n - 2]) / (s.time_s[n - 1] - s.time_s[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    a[i] = (s.speed[i + 1] - s.speed[i - 1]) / (s.time_s[i + 1] - s.time_s[i - 1]);
  }
  return a;
}

std::vector<AccelerationManeuver> extract_acceleration_maneuvers(const SpeedSeries& series,
                                                                 const ManeuverConfig& cfg,
                                                                 std::string_view ride_id) {
  std::vector<AccelerationManeuver> out;
  const auto accel = finite_difference_acceleration(series);
  const auto& t = series.time_s;

  struct Run {
    std::size_t first, last;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < accel.size(); ++i) {
    if (!(accel[i] > cfg.episode_floor)) continue;
    if (!runs.empty() && runs.back().last + 1 == i) {
      runs.back().last = i;
    } else if (!runs.empty() && t[i] - t[runs.back().last] < cfg.merge_gap_s) {
      runs.back().last = i;
    } else {
      runs.push_back({i, i});
    }
  }

  for (const auto& run : runs) {
    double a_peak = 0.0;
    std::optional<std::size_t> first_above, last_above;
    for (std::size_t i = run.first; i <= run.last; ++i) {
      a_peak = std::max(a_peak, accel[i]);
      if (accel[i] >= cfg.a_min) {
        if (!first_above) first_above = i;
        last_above = i;
      }
    }
    if (!first_above) continue;
    if (t[*last_above] - t[*first_above] < cfg.t_min) continue;
    const double v_start = series.speed[run.first];
    const double v_end = series.speed[run.last];
    if (v_end - v_start < cfg.dv_min) continue;
    if (a_peak > cfg.a_artifact) continue;
    out.push_back(AccelerationManeuver{std::string(ride_id), series.absolute_ms(run.first),
                                       series.absolute_ms(run.last), v_start, v_end, a_peak});
  }
  return out;
}

double max_velocity(std::span<const double> speeds) {
  if (speeds.empty()) throw Error(ErrorCode::EmptySeries, "max_velocity of empty series");
  return *std::max_element(speeds.begin(), speeds.end());
}

double fraction_above(std::span<const double> values, double threshold, Threshold mode) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "fraction_above of empty list");
  const auto hits = std::count_if(values.begin(), values.end(), [&](double v) {
    return mode == Threshold::AtLeast ? v >= threshold : v > threshold;
  });
  return static_cast<double>(hits) / static_cast<double>(values.size());
}

double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "correlation inputs differ in length");
  if (a.size() < 3) throw Error(ErrorCode::InsufficientData, "correlation needs at least 3 pairs");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorCode::ZeroVariance, "correlation input has zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

SpeedSeries speed_series(const ingest::RideTrace& trace) {
  if (trace.speeds && trace.speeds->size() == trace.points.size()) {
    SpeedSeries s;
    s.origin_ms = trace.points.front().timestamp_ms;
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
      s.time_s.push_back(static_cast<double>(trace.points[i].timestamp_ms - s.origin_ms) / 1000.0);
      s.speed.push_back((*trace.speeds)[i]);
    }
    return s;
  }
  return ingest::derive_speeds(trace);
}

RideKinematics analyze_ride(const ingest::RideTrace& trace, const AnalysisConfig& cfg) {
  auto series = speed_series(trace);
  series.speed = ingest::lowpass_velocity(series.speed, cfg.lowpass_alpha);
  RideKinematics rk;
  rk.ride_id = trace.ride_id;
  rk.v_max = max_velocity(series.speed);
  rk.maneuvers = extract_acceleration_maneuvers(series, cfg.maneuvers, trace.ride_id);
  return rk;
}

}  // namespace cyclesim::kinematics
