#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclesim/random.hpp"
#include "cyclesim/trace_ingest.hpp"

// Synthetic ride generator with known ground truth, used as a test oracle
// and for demos.
namespace cyclesim::synth {

enum class Profile {
  Constant,   // steady cruise, no maneuvers
  TwoRamp,    // rest, ramp, plateau, second ramp, cruise, stop: two maneuvers
  Realistic,  // stop-and-go commute with per-ride cruise speed
};

std::string_view to_string(Profile p) noexcept;
std::optional<Profile> profile_from_string(std::string_view s) noexcept;

struct GeneratorOptions {
  double interval_s = 3.0;    // fix spacing
  double gps_noise_m = 0.0;   // isotropic Gaussian position noise (std dev)
  double origin_lat = 52.5;   // degrees
  double origin_lon = 13.4;   // degrees
  std::int64_t start_ms = 1'600'000'000'000;
};

struct TruthManeuver {
  double start_s = 0.0;
  double end_s = 0.0;
  double v_start = 0.0;
  double v_end = 0.0;
  double accel = 0.0;  // constant acceleration of the ramp
};

struct GroundTruth {
  std::string ride_id;
  Profile profile = Profile::Constant;
  double v_max = 0.0;  // of the noiseless speed profile
  double duration_s = 0.0;
  double gps_noise_m = 0.0;
  std::vector<TruthManeuver> maneuvers;
};

struct SyntheticRide {
  ingest::RideTrace trace;
  GroundTruth truth;
};

/// Piecewise-constant-acceleration speed profile.
struct SpeedProfile {
  struct Segment {
    double duration = 0.0;  // s
    double v_end = 0.0;     // m/s reached at the end, linear in between
  };
  double v0 = 0.0;
  std::vector<Segment> segments;

  double duration() const noexcept;
  double speed_at(double t) const noexcept;
  /// Distance travelled after t seconds (exact for linear speed pieces).
  double distance_at(double t) const noexcept;
};

/// Fixes every options.interval_s along a straight line with random
/// bearing, plus optional position noise.
ingest::RideTrace render(const SpeedProfile& profile, Rng& rng, const GeneratorOptions& options,
                         std::string ride_id);

SyntheticRide generate_ride(Profile profile, Rng& rng, const GeneratorOptions& options,
                            std::string ride_id);

/// Rides "<profile>-0001", "<profile>-0002", ... from one seed.
std::vector<SyntheticRide> generate(std::size_t n, Profile profile, std::uint64_t seed,
                                    const GeneratorOptions& options = {});

std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(std::string_view text);

}  // namespace cyclesim::synth
