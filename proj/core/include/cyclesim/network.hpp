#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cyclesim::network {

// Local East-North frame in metres, origin at the intersection centre.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  bool operator==(const Vec2&) const = default;
};

double norm(Vec2 v) noexcept;
double distance(Vec2 a, Vec2 b) noexcept;
/// Counter-clockwise rotation by `quarter_turns` * 90 degrees.
Vec2 rotate_quarter(Vec2 v, int quarter_turns) noexcept;

/// Which leg of the intersection an approach occupies. Cyclists on the S
/// approach travel northbound into the intersection.
enum class Heading { N, E, S, W };

std::string_view to_string(Heading h) noexcept;
std::optional<Heading> heading_from_string(std::string_view s) noexcept;
/// Leg reached by a left turn from `from` (S -> W, W -> N, N -> E, E -> S).
Heading left_exit(Heading from) noexcept;
Heading opposite(Heading h) noexcept;
/// Heading after rotating the layout counter-clockwise by `quarter_turns`.
Heading rotate(Heading h, int quarter_turns) noexcept;

enum class Axis { NS, EW };
Axis axis_of(Heading h) noexcept;
Axis perpendicular(Axis a) noexcept;

struct Approach {
  Heading heading = Heading::S;
  int lane_count = 1;           // lanes per direction
  double lane_width = 3.5;      // m
  double approach_length = 50;  // m, length of the modelled leg
  bool has_bike_lane = false;
  double bike_lane_width = 1.5;  // m, curbside, only when has_bike_lane

  /// Distance from the road centreline to the curb.
  double half_width() const noexcept;
  /// Distance from the road centreline to the cyclists' riding line: the
  /// bike-lane centreline when there is one, else the curbside lane centre.
  double riding_offset() const noexcept;
};

struct Phase {
  Axis green = Axis::NS;
  double duration = 27.0;  // s of green; its last `amber` seconds show amber
  double all_red = 3.0;    // s following the green
};

struct SignalPlan {
  std::vector<Phase> phases;
  double amber = 3.0;

  double cycle() const noexcept;
  /// Throws InvalidSignalPlan on empty plans, non-positive durations, or an
  /// amber longer than a green.
  void validate() const;

  /// Two-phase fixed-time plan: N-S green, all-red, E-W green, all-red.
  static SignalPlan two_phase(double cycle = 60.0, double all_red = 3.0, double amber = 3.0);
};

enum class Light { Green, Amber, Red };

struct SignalState {
  Light ns = Light::Red;
  Light ew = Light::Red;

  Light of(Axis a) const noexcept { return a == Axis::NS ? ns : ew; }
  bool operator==(const SignalState&) const = default;
};

/// Fixed-time controller, periodic in plan.cycle(); t must be >= 0.
SignalState signal_state(const SignalPlan& plan, double t);

struct GeometryOptions {
  double crosswalk_width = 3.0;  // m between stop line and conflict area
  double sample_spacing = 0.5;   // m between polyline vertices
  double region_margin = 5.0;    // m added around the conflict area for timing
};

enum class TurnKind { Direct, Indirect, Through };
std::string_view to_string(TurnKind k) noexcept;

/// Path across the intersection, from the entry stop line to the far edge
/// of the exit crosswalk.
struct Trajectory {
  std::vector<Vec2> polyline;
  std::size_t stop_line_index = 0;
  std::optional<std::size_t> waiting_node_index;  // Indirect only
  TurnKind kind = TurnKind::Direct;
  Heading from = Heading::S;

  double length() const noexcept;
};

/// Axis-aligned rectangle.
struct Box {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  bool contains(Vec2 p, double eps = 0.0) const noexcept;
};

class Network {
 public:
  /// Requires one approach per heading (any order). Throws InvalidGeometry.
  static Network build_four_way(std::span<const Approach> approaches, SignalPlan signal,
                                GeometryOptions geometry = {});

  const Approach& approach(Heading h) const noexcept;
  const SignalPlan& signal() const noexcept { return signal_; }
  const GeometryOptions& geometry() const noexcept { return geometry_; }

  /// Interior area shared by crossing movements.
  Box conflict_area() const noexcept;
  /// Conflict area grown by geometry().region_margin on every side.
  Box timing_region() const noexcept;
  /// Everything the network covers: conflict area, crosswalks and legs.
  bool in_bounds(Vec2 p, double eps = 1e-9) const noexcept;

  /// Centre of the entry riding line at the stop line.
  Vec2 stop_line_point(Heading from) const noexcept;
  /// Point on the exit riding line at the far edge of the exit crosswalk.
  Vec2 exit_point(Heading from) const noexcept;
  /// Two-stage waiting position for an indirect left turn from `from`.
  Vec2 waiting_node(Heading from) const noexcept;
  /// Entry point at the upstream end of the approach leg.
  Vec2 approach_start(Heading from) const noexcept;
  /// End of the departure leg reached by the movement.
  Vec2 departure_end(Heading from, TurnKind kind) const noexcept;

  /// Checks whether p lies on the riding line of leg h, on its inbound
  /// (entry) or outbound (exit) side.
  double distance_to_riding_line(Vec2 p, Heading leg, bool inbound) const noexcept;

 private:
  struct Frame;
  Frame frame(Heading from) const noexcept;

  std::array<Approach, 4> approaches_{};
  SignalPlan signal_;
  GeometryOptions geometry_;
};

Trajectory synthesize_direct_turn(const Network& net, Heading from);
Trajectory synthesize_indirect_turn(const Network& net, Heading from);
Trajectory synthesize_through(const Network& net, Heading from);

/// Complete path used by the simulator: approach leg, the crossing
/// trajectory, and the departure leg, with arc-length landmarks.
struct Route {
  Heading from = Heading::S;
  TurnKind kind = TurnKind::Direct;
  std::vector<Vec2> polyline;
  std::vector<double> arc;  // cumulative arc length per vertex
  double stop_line_s = 0.0;
  std::optional<double> waiting_s;
  double region_enter_s = 0.0;
  double region_exit_s = 0.0;

  double length() const noexcept { return arc.empty() ? 0.0 : arc.back(); }
  Vec2 point_at(double s) const noexcept;
};

Route build_route(const Network& net, Heading from, TurnKind kind);

}  // namespace cyclesim::network
