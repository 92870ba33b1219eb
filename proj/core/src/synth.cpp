#include "cyclesim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "cyclesim/distfit.hpp"
#include "cyclesim/error.hpp"

namespace cyclesim::synth {

std::string_view to_string(Profile p) noexcept {
  switch (p) {
    case Profile::Constant: return "constant";
    case Profile::TwoRamp: return "two_ramp";
    case Profile::Realistic: return "realistic";
  }
  return "?";
}

std::optional<Profile> profile_from_string(std::string_view s) noexcept {
  for (auto p : {Profile::Constant, Profile::TwoRamp, Profile::Realistic}) {
    if (to_string(p) == s) return p;
  }
  if (s == "two-ramp") return Profile::TwoRamp;
  return std::nullopt;
}

double SpeedProfile::duration() const noexcept {
  double d = 0.0;
  for (const auto& s : segments) d += s.duration;
  return d;
}

double SpeedProfile::speed_at(double t) const noexcept {
  double v = v0;
  for (const auto& s : segments) {
    if (t <= s.duration) return v + (s.v_end - v) * (t / s.duration);
    t -= s.duration;
    v = s.v_end;
  }
  return v;
}

double SpeedProfile::distance_at(double t) const noexcept {
  double v = v0;
  double d = 0.0;
  for (const auto& s : segments) {
    const double dt = std::min(t, s.duration);
    const double v_t = v + (s.v_end - v) * (dt / s.duration);
    d += 0.5 * (v + v_t) * dt;
    if (t <= s.duration) return d;
    t -= s.duration;
    v = s.v_end;
  }
  return d + v * t;
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }
double normal(Rng& rng) { return distfit::normal_quantile(rng.uniform()); }

// Ramp from the current end speed to v at constant acceleration a.
void ramp(SpeedProfile& p, GroundTruth& truth, double t_now, double v_from, double v_to, double a) {
  const double dur = std::abs(v_to - v_from) / a;
  p.segments.push_back({dur, v_to});
  if (v_to > v_from) truth.maneuvers.push_back({t_now, t_now + dur, v_from, v_to, a});
}

void hold(SpeedProfile& p, double dur, double v) { p.segments.push_back({dur, v}); }

SpeedProfile constant_profile(Rng& rng, GroundTruth& truth) {
  SpeedProfile p;
  p.v0 = uniform(rng, 3.0, 7.0);
  hold(p, uniform(rng, 120.0, 300.0), p.v0);
  truth.v_max = p.v0;
  return p;
}

SpeedProfile two_ramp_profile(Rng& rng, GroundTruth& truth) {
  SpeedProfile p;
  double t = 0.0;
  const double rest = 15.0;
  hold(p, rest, 0.0);
  t += rest;
  const double v1 = uniform(rng, 3.5, 5.0);
  const double a1 = uniform(rng, 0.5, 1.0);
  ramp(p, truth, t, 0.0, v1, a1);
  t += v1 / a1;
  const double plateau = uniform(rng, 30.0, 45.0);
  hold(p, plateau, v1);
  t += plateau;
  const double v2 = v1 + uniform(rng, 2.0, 3.0);
  const double a2 = uniform(rng, 0.4, 0.8);
  ramp(p, truth, t, v1, v2, a2);
  t += (v2 - v1) / a2;
  const double cruise = uniform(rng, 30.0, 45.0);
  hold(p, cruise, v2);
  t += cruise;
  ramp(p, truth, t, v2, 0.0, 1.0);
  hold(p, 6.0, 0.0);
  truth.v_max = v2;
  return p;
}

// Stop-and-go: legs of accelerate / cruise / brake / wait. Cruise speed is
// per ride, acceleration per ramp.
SpeedProfile realistic_profile(Rng& rng, GroundTruth& truth) {
  SpeedProfile p;
  const double cruise = std::clamp(6.9 + 1.05 * normal(rng), 3.0, 11.0);
  auto draw_accel = [&] { return std::clamp(0.52 * std::exp(0.9 * normal(rng)), 0.15, 3.5); };
  const int legs = 2 + static_cast<int>(rng.uniform() * 4.0);
  double t = 0.0;
  double v_peak = 0.0;
  hold(p, uniform(rng, 3.0, 12.0), 0.0);
  t += p.segments.back().duration;
  for (int leg = 0; leg < legs; ++leg) {
    const double v = cruise * uniform(rng, 0.88, 1.0);
    const double a = draw_accel();
    ramp(p, truth, t, 0.0, v, a);
    t += v / a;
    double cur = v;
    const double c1 = uniform(rng, 20.0, 70.0);
    hold(p, c1, cur);
    t += c1;
    if (rng.uniform() < 0.3) {
      const double slow = std::max(1.0, cur - uniform(rng, 1.5, 2.5));
      ramp(p, truth, t, cur, slow, 1.2);
      t += (cur - slow) / 1.2;
      const double a2 = draw_accel();
      ramp(p, truth, t, slow, cur, a2);
      t += (cur - slow) / a2;
      const double c2 = uniform(rng, 15.0, 40.0);
      hold(p, c2, cur);
      t += c2;
    }
    v_peak = std::max(v_peak, cur);
    const double b = uniform(rng, 1.0, 2.0);
    ramp(p, truth, t, cur, 0.0, b);
    t += cur / b;
    const double wait = uniform(rng, 8.0, 30.0);
    hold(p, wait, 0.0);
    t += wait;
  }
  truth.v_max = v_peak;
  return p;
}

}  // namespace

ingest::RideTrace render(const SpeedProfile& profile, Rng& rng, const GeneratorOptions& options,
                         std::string ride_id) {
  if (!(options.interval_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "interval_s must be > 0");
  ingest::RideTrace trace;
  trace.ride_id = std::move(ride_id);
  const double bearing = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double lat0 = options.origin_lat + uniform(rng, -0.05, 0.05);
  const double lon0 = options.origin_lon + uniform(rng, -0.05, 0.05);
  const double r = ingest::kEarthRadiusM;
  const double deg = 180.0 / std::numbers::pi;
  const double coslat = std::cos(lat0 / deg);
  const double total = profile.duration();
  const auto n = static_cast<std::size_t>(std::floor(total / options.interval_s + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * options.interval_s;
    const double d = profile.distance_at(t);
    double east = d * std::sin(bearing);
    double north = d * std::cos(bearing);
    if (options.gps_noise_m > 0.0) {
      east += options.gps_noise_m * normal(rng);
      north += options.gps_noise_m * normal(rng);
    }
    ingest::GeoPoint g;
    g.timestamp_ms = options.start_ms + std::llround(t * 1000.0);
    g.lat = lat0 + north / r * deg;
    g.lon = lon0 + east / (r * coslat) * deg;
    trace.points.push_back(g);
  }
  return trace;
}

SyntheticRide generate_ride(Profile profile, Rng& rng, const GeneratorOptions& options,
                            std::string ride_id) {
  SyntheticRide ride;
  ride.truth.ride_id = ride_id;
  ride.truth.profile = profile;
  ride.truth.gps_noise_m = options.gps_noise_m;
  SpeedProfile sp;
  switch (profile) {
    case Profile::Constant: sp = constant_profile(rng, ride.truth); break;
    case Profile::TwoRamp: sp = two_ramp_profile(rng, ride.truth); break;
    case Profile::Realistic: sp = realistic_profile(rng, ride.truth); break;
  }
  ride.truth.duration_s = sp.duration();
  ride.trace = render(sp, rng, options, std::move(ride_id));
  return ride;
}

std::vector<SyntheticRide> generate(std::size_t n, Profile profile, std::uint64_t seed,
                                    const GeneratorOptions& options) {
  std::vector<SyntheticRide> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", std::string(to_string(profile)).c_str(), i + 1);
    // One stream per ride so ride k does not depend on how many came before.
    Rng rng = Rng::stream(seed, id);
    out.push_back(generate_ride(profile, rng, options, id));
  }
  return out;
}

std::string truth_to_json(const GroundTruth& truth) {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& x : truth.maneuvers) {
    m.push_back({{"start_s", x.start_s},
                 {"end_s", x.end_s},
                 {"v_start", x.v_start},
                 {"v_end", x.v_end},
                 {"accel", x.accel}});
  }
  nlohmann::json j = {{"schema", "cyclesim.truth"},
                      {"schema_version", 1},
                      {"ride_id", truth.ride_id},
                      {"profile", to_string(truth.profile)},
                      {"v_max", truth.v_max},
                      {"duration_s", truth.duration_s},
                      {"gps_noise_m", truth.gps_noise_m},
                      {"maneuver_count", truth.maneuvers.size()},
                      {"maneuvers", m}};
  return j.dump(2);
}

GroundTruth truth_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("schema", "") != "cyclesim.truth" || j.value("schema_version", 0) != 1) {
      throw Error(ErrorCode::VersionMismatch, "not a cyclesim.truth v1 document");
    }
    GroundTruth t;
    t.ride_id = j.at("ride_id").get<std::string>();
    const auto p = profile_from_string(j.at("profile").get<std::string>());
    if (!p) throw Error(ErrorCode::MalformedFile, "unknown profile");
    t.profile = *p;
    t.v_max = j.at("v_max").get<double>();
    t.duration_s = j.at("duration_s").get<double>();
    t.gps_noise_m = j.at("gps_noise_m").get<double>();
    for (const auto& m : j.at("maneuvers")) {
      t.maneuvers.push_back({m.at("start_s"), m.at("end_s"), m.at("v_start"), m.at("v_end"),
                             m.at("accel")});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("truth sidecar: ") + e.what());
  }
}

}  // namespace cyclesim::synth
