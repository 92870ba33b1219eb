#include "cyclesim/trace_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cyclesim/error.hpp"
#include "text_util.hpp"

namespace cyclesim {

std::int64_t SpeedSeries::absolute_ms(std::size_t i) const {
  return origin_ms + static_cast<std::int64_t>(std::llround(time_s.at(i) * 1000.0));
}

namespace ingest {

namespace {

constexpr std::string_view kHeaderMagic = "cyclesim-ride#1";
constexpr std::string_view kBodyVersion = "cyclesim#1";

bool is_separator(std::string_view line) {
  line = detail::trim(line);
  return !line.empty() && std::all_of(line.begin(), line.end(), [](char c) { return c == '='; });
}

bool is_version_line(std::string_view line) {
  return line.find(',') == std::string_view::npos && line.find('#') != std::string_view::npos;
}

struct Columns {
  std::size_t lat = 0, lon = 0, ts = 0;
  std::optional<std::size_t> speed;
  std::size_t count = 0;
};

Columns find_columns(std::string_view header_line) {
  auto names = detail::split(header_line, ',');
  std::optional<std::size_t> lat, lon, ts, speed;
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto n = detail::trim(names[i]);
    if (n == "lat") lat = i;
    else if (n == "lon") lon = i;
    else if (n == "timeStamp") ts = i;
    else if (n == "speed") speed = i;
  }
  if (!lat || !lon || !ts) {
    throw Error(ErrorCode::MalformedFile,
                "body header must name lat, lon and timeStamp columns, got '" +
                    std::string(header_line) + "'");
  }
  return Columns{*lat, *lon, *ts, speed, names.size()};
}

std::string_view field(const std::vector<std::string_view>& row, std::size_t i) {
  return i < row.size() ? detail::trim(row[i]) : std::string_view{};
}

double to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

double median(std::vector<double> v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  double upper = *mid;
  double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

std::string_view to_string(Defect d) noexcept {
  switch (d) {
    case Defect::NonMonotonicTime: return "non_monotonic_time";
    case Defect::DuplicateTime: return "duplicate_time";
    case Defect::TeleportJump: return "teleport_jump";
    case Defect::TooShort: return "too_short";
    case Defect::SpeedOutlier: return "speed_outlier";
    case Defect::IrregularSampling: return "irregular_sampling";
    case Defect::InvalidCoordinate: return "invalid_coordinate";
  }
  return "unknown";
}

std::optional<Defect> defect_from_string(std::string_view name) noexcept {
  for (auto d : {Defect::NonMonotonicTime, Defect::DuplicateTime, Defect::TeleportJump,
                 Defect::TooShort, Defect::SpeedOutlier, Defect::IrregularSampling,
                 Defect::InvalidCoordinate}) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

ValidationConfig parse_validation_config(std::string_view json_text) {
  using nlohmann::json;
  ValidationConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("validation config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "validation config must be an object");
  try {
    for (auto& [key, value] : j.items()) {
      if (key == "max_jump_speed") cfg.max_jump_speed = value.get<double>();
      else if (key == "min_points") cfg.min_points = value.get<std::size_t>();
      else if (key == "min_duration_s") cfg.min_duration_s = value.get<double>();
      else if (key == "outlier_speed") cfg.outlier_speed = value.get<double>();
      else if (key == "outlier_run") cfg.outlier_run = value.get<std::size_t>();
      else if (key == "min_median_interval_s") cfg.min_median_interval_s = value.get<double>();
      else if (key == "max_median_interval_s") cfg.max_median_interval_s = value.get<double>();
      else if (key == "fatal") {
        cfg.fatal.clear();
        for (const auto& name : value) {
          auto d = defect_from_string(name.get<std::string>());
          if (!d) throw Error(ErrorCode::InvalidConfig, "unknown defect code " + name.dump());
          cfg.fatal.insert(*d);
        }
      } else if (key == "schema_version") {
        continue;
      } else {
        throw Error(ErrorCode::InvalidConfig, "unknown validation key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("validation config: ") + e.what());
  }
  if (cfg.max_jump_speed <= 0 || cfg.outlier_speed <= 0 || cfg.outlier_run == 0 ||
      cfg.min_median_interval_s <= 0 || cfg.max_median_interval_s < cfg.min_median_interval_s) {
    throw Error(ErrorCode::InvalidConfig, "validation thresholds must be positive and ordered");
  }
  return cfg;
}

std::string to_json(const ValidationConfig& cfg) {
  nlohmann::json j;
  j["max_jump_speed"] = cfg.max_jump_speed;
  j["min_points"] = cfg.min_points;
  j["min_duration_s"] = cfg.min_duration_s;
  j["outlier_speed"] = cfg.outlier_speed;
  j["outlier_run"] = cfg.outlier_run;
  j["min_median_interval_s"] = cfg.min_median_interval_s;
  j["max_median_interval_s"] = cfg.max_median_interval_s;
  auto fatal = nlohmann::json::array();
  for (auto d : cfg.fatal) fatal.push_back(std::string(to_string(d)));
  j["fatal"] = fatal;
  return j.dump(2);
}

RideTrace parse_ride(std::string_view raw, std::string_view fallback_id) {
  const auto lines = detail::split_lines(raw);
  auto sep = std::find_if(lines.begin(), lines.end(), is_separator);
  if (sep == lines.end()) throw Error(ErrorCode::MalformedFile, "no '=' separator line");

  RideTrace trace;
  trace.ride_id = std::string(fallback_id);

  std::vector<std::string_view> header;
  for (auto it = lines.begin(); it != sep; ++it) {
    if (!detail::trim(*it).empty()) header.push_back(detail::trim(*it));
  }
  if (header.empty()) throw Error(ErrorCode::MalformedFile, "empty header block");
  if (header.front() == kHeaderMagic) {
    for (std::size_t i = 1; i < header.size(); ++i) {
      auto comma = header[i].find(',');
      if (comma == std::string_view::npos) continue;
      auto key = header[i].substr(0, comma);
      auto value = header[i].substr(comma + 1);
      if (key == "ride_id") trace.ride_id = std::string(value);
      else if (key == "region") trace.region_tag = std::string(value);
    }
  }

  auto it = std::next(sep);
  while (it != lines.end() && detail::trim(*it).empty()) ++it;
  if (it != lines.end() && is_version_line(detail::trim(*it))) ++it;
  if (it == lines.end()) throw Error(ErrorCode::MalformedFile, "missing CSV body header");
  const Columns cols = find_columns(*it);
  ++it;

  std::vector<double> speeds;
  bool all_speeds = cols.speed.has_value();
  std::size_t line_no = static_cast<std::size_t>(it - lines.begin());
  for (; it != lines.end(); ++it, ++line_no) {
    if (detail::trim(*it).empty()) continue;
    auto row = detail::split(*it, ',');
    auto lat_s = field(row, cols.lat);
    auto lon_s = field(row, cols.lon);
    if (lat_s.empty() || lon_s.empty()) continue;
    auto lat = detail::parse_number<double>(lat_s);
    auto lon = detail::parse_number<double>(lon_s);
    auto ts = detail::parse_number<std::int64_t>(field(row, cols.ts));
    if (!ts) {
      // Some exports write timestamps as floating point milliseconds.
      if (auto tsd = detail::parse_number<double>(field(row, cols.ts))) {
        ts = static_cast<std::int64_t>(std::llround(*tsd));
      }
    }
    if (!lat || !lon || !ts) {
      throw Error(ErrorCode::MalformedFile,
                  "unparseable geo row at line " + std::to_string(line_no + 1));
    }
    trace.points.push_back(GeoPoint{*ts, *lat, *lon});
    if (all_speeds) {
      auto v = detail::parse_number<double>(field(row, *cols.speed));
      if (v) speeds.push_back(*v);
      else all_speeds = false;
    }
  }
  if (trace.points.size() < 2) {
    throw Error(ErrorCode::EmptyRide, "ride has " + std::to_string(trace.points.size()) +
                                          " geo rows, need at least 2");
  }
  if (all_speeds) trace.speeds = std::move(speeds);
  return trace;
}

std::string write_ride(const RideTrace& trace) {
  std::ostringstream out;
  out << kHeaderMagic << '\n';
  out << "ride_id," << trace.ride_id << '\n';
  if (trace.region_tag) out << "region," << *trace.region_tag << '\n';
  out << "=========================\n";
  out << kBodyVersion << '\n';
  const bool with_speed = trace.speeds && trace.speeds->size() == trace.points.size();
  out << "lat,lon,timeStamp" << (with_speed ? ",speed" : "") << '\n';
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    const auto& p = trace.points[i];
    out << detail::format_double(p.lat) << ',' << detail::format_double(p.lon) << ','
        << p.timestamp_ms;
    if (with_speed) out << ',' << detail::format_double((*trace.speeds)[i]);
    out << '\n';
  }
  return out.str();
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double dlat = to_rad(b.lat - a.lat);
  const double dlon = to_rad(b.lon - a.lon);
  const double s1 = std::sin(dlat / 2);
  const double s2 = std::sin(dlon / 2);
  const double h = s1 * s1 + std::cos(to_rad(a.lat)) * std::cos(to_rad(b.lat)) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

ValidationReport validate_trace(const RideTrace& trace, const ValidationConfig& rules) {
  std::set<Defect> found;
  const auto& pts = trace.points;

  for (const auto& p : pts) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90 || p.lat > 90 ||
        p.lon < -180 || p.lon > 180) {
      found.insert(Defect::InvalidCoordinate);
      break;
    }
  }

  std::vector<double> intervals;
  std::size_t outlier_streak = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto dt_ms = pts[i].timestamp_ms - pts[i - 1].timestamp_ms;
    if (dt_ms < 0) {
      found.insert(Defect::NonMonotonicTime);
      outlier_streak = 0;
      continue;
    }
    if (dt_ms == 0) {
      found.insert(Defect::DuplicateTime);
      continue;
    }
    const double dt = static_cast<double>(dt_ms) / 1000.0;
    intervals.push_back(dt);
    const double v = haversine_m(pts[i - 1], pts[i]) / dt;
    if (v > rules.max_jump_speed) found.insert(Defect::TeleportJump);
    outlier_streak = v > rules.outlier_speed ? outlier_streak + 1 : 0;
    if (outlier_streak >= rules.outlier_run) found.insert(Defect::SpeedOutlier);
  }

  const double duration_s =
      pts.size() >= 2 ? static_cast<double>(pts.back().timestamp_ms - pts.front().timestamp_ms) / 1000.0
                      : 0.0;
  if (pts.size() < rules.min_points || duration_s < rules.min_duration_s) {
    found.insert(Defect::TooShort);
  }
  if (intervals.empty()) {
    found.insert(Defect::IrregularSampling);
  } else {
    const double med = median(intervals);
    if (med < rules.min_median_interval_s || med > rules.max_median_interval_s) {
      found.insert(Defect::IrregularSampling);
    }
  }

  ValidationReport report;
  report.defects.assign(found.begin(), found.end());
  report.accepted = std::none_of(found.begin(), found.end(),
                                 [&](Defect d) { return rules.fatal.contains(d); });
  const auto kept = clean_trace(trace).points.size();
  report.points_kept = kept;
  report.points_dropped = pts.size() - kept;
  return report;
}

RideTrace clean_trace(const RideTrace& trace) {
  RideTrace out;
  out.ride_id = trace.ride_id;
  out.region_tag = trace.region_tag;
  const bool with_speed = trace.speeds && trace.speeds->size() == trace.points.size();
  std::vector<double> speeds;
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    const auto& p = trace.points[i];
    if (!out.points.empty() && p.timestamp_ms <= out.points.back().timestamp_ms) continue;
    out.points.push_back(p);
    if (with_speed) speeds.push_back((*trace.speeds)[i]);
  }
  if (with_speed) out.speeds = std::move(speeds);
  return out;
}

std::vector<GeoPoint> gaussian_kernel_smooth(std::span<const GeoPoint> points, double bandwidth_s) {
  if (!(bandwidth_s > 0.0) || !std::isfinite(bandwidth_s)) {
    throw Error(ErrorCode::InvalidBandwidth, "bandwidth must be > 0 s");
  }
  // Weights beyond 8 bandwidths are below 1.3e-14 of the centre weight.
  const double cutoff_ms = 8.0 * bandwidth_s * 1000.0;
  const double inv_two_var = 1.0 / (2.0 * bandwidth_s * bandwidth_s);

  std::vector<GeoPoint> out(points.begin(), points.end());
  std::size_t lo = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& centre = points[i];
    while (lo < i && static_cast<double>(centre.timestamp_ms - points[lo].timestamp_ms) > cutoff_ms) ++lo;
    double wsum = 0.0, dlat = 0.0, dlon = 0.0;
    for (std::size_t j = lo; j < points.size(); ++j) {
      const double dt_ms = static_cast<double>(points[j].timestamp_ms - centre.timestamp_ms);
      if (dt_ms > cutoff_ms) break;
      const double dt = dt_ms / 1000.0;
      const double w = std::exp(-dt * dt * inv_two_var);
      wsum += w;
      // Offsets from the centre keep identical inputs bit-exact.
      dlat += w * (points[j].lat - centre.lat);
      dlon += w * (points[j].lon - centre.lon);
    }
    out[i].lat = centre.lat + dlat / wsum;
    out[i].lon = centre.lon + dlon / wsum;
  }
  return out;
}

std::vector<double> lowpass_velocity(std::span<const double> speeds, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidAlpha, "alpha must be in (0, 1]");
  if (speeds.empty()) throw Error(ErrorCode::EmptySeries, "lowpass of empty series");
  std::vector<double> out(speeds.size());
  out[0] = speeds[0];
  for (std::size_t i = 1; i < speeds.size(); ++i) {
    out[i] = alpha * speeds[i] + (1.0 - alpha) * out[i - 1];
  }
  return out;
}

SpeedSeries derive_speeds(const RideTrace& trace) {
  const auto& pts = trace.points;
  if (pts.size() < 2) throw Error(ErrorCode::DegenerateTrace, "need at least 2 points");
  SpeedSeries series;
  series.origin_ms = pts.front().timestamp_ms;
  series.time_s.reserve(pts.size() - 1);
  series.speed.reserve(pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto dt_ms = pts[i].timestamp_ms - pts[i - 1].timestamp_ms;
    if (dt_ms <= 0) {
      throw Error(ErrorCode::DegenerateTrace,
                  "non-increasing timestamp at point " + std::to_string(i));
    }
    const double dt = static_cast<double>(dt_ms) / 1000.0;
    const double t_mid =
        static_cast<double>(pts[i - 1].timestamp_ms - series.origin_ms) / 1000.0 + dt / 2.0;
    series.time_s.push_back(t_mid);
    series.speed.push_back(haversine_m(pts[i - 1], pts[i]) / dt);
  }
  return series;
}

}  // namespace ingest
}  // namespace cyclesim
