#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cyclesim/distfit.hpp"
#include "cyclesim/network.hpp"
#include "cyclesim/random.hpp"

namespace cyclesim::sim {

using network::Heading;
using network::TurnKind;

struct CyclistParams {
  double a_max = 1.2;    // m/s^2
  double v_max = 5.56;   // m/s
  double b_max = 3.0;    // comfortable deceleration, m/s^2
  double min_gap = 0.5;  // m, standstill gap to the leader's rear
  double length = 1.8;   // m

  bool operator==(const CyclistParams&) const = default;
};

enum class ParamSource { Scalar, Fitted };
std::string_view to_string(ParamSource s) noexcept;
std::optional<ParamSource> param_source_from_string(std::string_view s) noexcept;

enum class DepartSpeed { Zero, Max };

// Truncation bounds applied to fitted draws.
inline constexpr double kMinVMax = 1.0;
inline constexpr double kMaxAMax = 4.0;

struct ParamModel {
  ParamSource source = ParamSource::Scalar;
  CyclistParams defaults;  // scalar values, and b_max/min_gap/length for fitted mode
  std::optional<distfit::Distribution> accel;  // a_max, fitted mode
  std::optional<distfit::Distribution> speed;  // v_max, fitted mode
};

/// Scalar mode returns the defaults and draws nothing. Fitted mode draws
/// a_max and v_max independently by inverse transform; draws outside
/// (0, kMaxAMax] or [kMinVMax, inf) are rejected and redrawn, and each
/// rejection increments *rejections when given.
CyclistParams sample_cyclist_params(const ParamModel& model, Rng& rng,
                                    std::size_t* rejections = nullptr);

/// Bernoulli(p_indirect) unless lane_only. Always consumes exactly one draw.
TurnKind choose_turn(Rng& rng, double p_indirect, bool lane_only);

struct Leader {
  double gap = 0.0;    // m from own front to the leader's rear
  double speed = 0.0;  // m/s
};

/// Highest speed for the coming step that still lets the cyclist stop
/// behind the leader using p.b_max, with one step of reaction time:
///   v*step + v^2/(2b) <= g + v_l^2/(2b),   g = max(0, gap - min_gap)
/// and never more than g/step, so the gap cannot close within one step.
/// Below b*step the bound relaxes to g/step, letting a queue close up
/// exactly instead of creeping. Without a leader this is p.v_max.
double safe_speed(const std::optional<Leader>& leader, const CyclistParams& p, double step);

// ---------------------------------------------------------------------------

struct Scenario {
  std::string name = "default";
  std::vector<network::Approach> approaches;
  network::SignalPlan signal;
  network::GeometryOptions geometry;
  bool lane_only = false;

  /// Symmetric 2-lane four-way intersection with a 60 s two-phase plan.
  static Scenario default_four_way();
};

struct SimConfig {
  double step = 1.0;        // s
  double duration = 3600;   // s during which arrivals are generated
  double cooldown = 0.0;    // s simulated after `duration` without arrivals
  std::uint64_t seed = 1;
  double demand = 200.0;    // cyclists per hour per active approach
  std::vector<Heading> active = {Heading::N, Heading::E, Heading::S, Heading::W};
  double p_indirect = 0.57;
  double through_fraction = 0.0;  // share of arrivals going straight
  std::optional<std::size_t> max_arrivals;  // stop generating after this many, all approaches
  std::optional<bool> lane_only;  // overrides Scenario::lane_only when set
  ParamModel params;
  DepartSpeed depart = DepartSpeed::Zero;
  double emergency_decel = 7.0;  // m/s^2, reported, not enforced

  /// Throws InvalidConfig.
  void validate() const;
};

enum class CyclistPhase { Approaching, Waiting, Crossing, Done };
std::string_view to_string(CyclistPhase p) noexcept;
std::optional<CyclistPhase> cyclist_phase_from_string(std::string_view s) noexcept;

struct StepRecord {
  double t = 0.0;
  std::uint64_t id = 0;
  double s = 0.0;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  CyclistPhase phase = CyclistPhase::Approaching;

  bool operator==(const StepRecord&) const = default;
};

struct CyclistSummary {
  std::uint64_t id = 0;
  Heading from = Heading::S;
  TurnKind kind = TurnKind::Direct;
  double arrival_s = 0.0;  // Poisson arrival time
  double spawn_s = 0.0;    // time the cyclist entered the network
  CyclistParams params;
  std::optional<double> entry_s;  // front enters the timing region
  std::optional<double> exit_s;   // front leaves the timing region
  double max_speed = 0.0;         // observed
  double max_accel = 0.0;         // observed, per step
  bool obstructed = false;        // a leader or signal ever limited its speed
  bool completed = false;

  std::optional<double> crossing_duration() const {
    if (entry_s && exit_s) return *exit_s - *entry_s;
    return std::nullopt;
  }
  bool operator==(const CyclistSummary&) const = default;
};

struct TrajectoryLog {
  std::vector<StepRecord> records;
  std::vector<CyclistSummary> cyclists;  // ordered by id, completed or not
  std::size_t spawned = 0;
  std::size_t completed = 0;
  std::size_t in_network = 0;
  std::size_t pending = 0;           // arrivals still queued at the entry
  std::size_t param_rejections = 0;  // truncation redraws
  double end_time = 0.0;
};

struct CyclistState {
  std::uint64_t id = 0;
  Heading from = Heading::S;
  TurnKind kind = TurnKind::Direct;
  CyclistParams params;
  double s = 0.0;      // front position along the route, m
  double speed = 0.0;  // m/s
  CyclistPhase phase = CyclistPhase::Approaching;
  bool node_green_seen = false;  // start-up delay bookkeeping at the waiting node
};

/// Fixed-step simulation over one scenario.
class Simulation {
 public:
  Simulation(Scenario scenario, SimConfig config);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  /// Inserts a cyclist directly, bypassing arrivals (tests, demos).
  std::uint64_t add_cyclist(Heading from, TurnKind kind, const CyclistParams& params,
                            double s = 0.0, double speed = 0.0);

  /// Spawns due arrivals, then advances every cyclist by one step.
  /// Throws InternalInconsistency if a following gap turns negative.
  void step();
  /// Steps until duration + cooldown.
  void run_to_end();

  double time() const noexcept;
  bool finished() const noexcept;
  const network::Network& network() const noexcept;
  const network::Route& route(Heading from, TurnKind kind) const;
  std::vector<CyclistState> active() const;
  const TrajectoryLog& log() const noexcept;
  TrajectoryLog take_log();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

TrajectoryLog run(const Scenario& scenario, const SimConfig& config);

// ---------------------------------------------------------------------------
// Serialization. Step records as CSV, summaries as JSON; both carry a schema
// tag and version and reject mismatches on read.

inline constexpr int kSchemaVersion = 1;

void write_records_csv(std::ostream& out, const std::vector<StepRecord>& records);
std::vector<StepRecord> read_records_csv(std::istream& in);

std::string summaries_to_json(const TrajectoryLog& log, std::string_view metadata_json = "{}");
/// Counts and cyclists; records are left empty.
TrajectoryLog summaries_from_json(std::string_view text);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(std::string_view text);
/// Reads the optional "sim" block of a scenario file over `base`.
SimConfig sim_config_from_json(std::string_view text, SimConfig base = {});
std::string sim_config_to_json(const SimConfig& c);

}  // namespace cyclesim::sim
