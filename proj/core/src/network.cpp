#include "cyclesim/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cyclesim/error.hpp"

namespace cyclesim::network {

double norm(Vec2 v) noexcept { return std::hypot(v.x, v.y); }
double distance(Vec2 a, Vec2 b) noexcept { return norm(a - b); }

Vec2 rotate_quarter(Vec2 v, int quarter_turns) noexcept {
  switch (((quarter_turns % 4) + 4) % 4) {
    case 1: return {-v.y, v.x};
    case 2: return {-v.x, -v.y};
    case 3: return {v.y, -v.x};
    default: return v;
  }
}

std::string_view to_string(Heading h) noexcept {
  switch (h) {
    case Heading::N: return "N";
    case Heading::E: return "E";
    case Heading::S: return "S";
    case Heading::W: return "W";
  }
  return "?";
}

std::optional<Heading> heading_from_string(std::string_view s) noexcept {
  if (s == "N") return Heading::N;
  if (s == "E") return Heading::E;
  if (s == "S") return Heading::S;
  if (s == "W") return Heading::W;
  return std::nullopt;
}

namespace {

// Counter-clockwise order starting east.
int ccw_index(Heading h) noexcept {
  switch (h) {
    case Heading::E: return 0;
    case Heading::N: return 1;
    case Heading::W: return 2;
    case Heading::S: return 3;
  }
  return 0;
}

Heading from_ccw_index(int i) noexcept {
  constexpr Heading order[] = {Heading::E, Heading::N, Heading::W, Heading::S};
  return order[((i % 4) + 4) % 4];
}

// Quarter turns that carry the canonical "from south" layout onto `from`.
int frame_turns(Heading from) noexcept { return ccw_index(from) - ccw_index(Heading::S); }

std::size_t slot(Heading h) noexcept { return static_cast<std::size_t>(h); }

void append_segment(std::vector<Vec2>& out, Vec2 a, Vec2 b, double spacing) {
  const double len = distance(a, b);
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing - 1e-9)));
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    out.push_back(i == steps ? b : a + t * (b - a));
  }
}

Vec2 bezier(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double t) noexcept {
  const double u = 1.0 - t;
  return (u * u * u) * p0 + (3.0 * u * u * t) * p1 + (3.0 * u * t * t) * p2 + (t * t * t) * p3;
}

// Samples a cubic Bezier at (approximately) uniform arc-length spacing.
std::vector<Vec2> sample_bezier(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double spacing) {
  constexpr std::size_t kFine = 4096;
  std::vector<Vec2> fine(kFine + 1);
  std::vector<double> arc(kFine + 1, 0.0);
  for (std::size_t i = 0; i <= kFine; ++i) {
    fine[i] = bezier(p0, p1, p2, p3, static_cast<double>(i) / kFine);
    if (i > 0) arc[i] = arc[i - 1] + distance(fine[i - 1], fine[i]);
  }
  const double total = arc.back();
  const auto segments = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(total / spacing)));
  std::vector<Vec2> out;
  out.reserve(segments + 1);
  out.push_back(p0);
  std::size_t j = 1;
  for (std::size_t k = 1; k < segments; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(segments);
    while (arc[j] < target) ++j;
    const double f = (target - arc[j - 1]) / (arc[j] - arc[j - 1]);
    out.push_back(fine[j - 1] + f * (fine[j] - fine[j - 1]));
  }
  out.push_back(p3);
  return out;
}

}  // namespace

Heading left_exit(Heading from) noexcept { return from_ccw_index(ccw_index(from) - 1); }
Heading opposite(Heading h) noexcept { return from_ccw_index(ccw_index(h) + 2); }
Heading rotate(Heading h, int quarter_turns) noexcept {
  return from_ccw_index(ccw_index(h) + quarter_turns);
}

Axis axis_of(Heading h) noexcept {
  return (h == Heading::N || h == Heading::S) ? Axis::NS : Axis::EW;
}
Axis perpendicular(Axis a) noexcept { return a == Axis::NS ? Axis::EW : Axis::NS; }

double Approach::half_width() const noexcept {
  return lane_count * lane_width + (has_bike_lane ? bike_lane_width : 0.0);
}

double Approach::riding_offset() const noexcept {
  return has_bike_lane ? lane_count * lane_width + bike_lane_width / 2.0
                       : (lane_count - 0.5) * lane_width;
}

// --- signal ---------------------------------------------------------------

double SignalPlan::cycle() const noexcept {
  double c = 0.0;
  for (const auto& p : phases) c += p.duration + p.all_red;
  return c;
}

void SignalPlan::validate() const {
  if (phases.empty()) throw Error(ErrorCode::InvalidSignalPlan, "signal plan has no phases");
  if (!(amber >= 0.0)) throw Error(ErrorCode::InvalidSignalPlan, "amber must be >= 0");
  for (const auto& p : phases) {
    if (!(p.duration > 0.0) || !(p.all_red >= 0.0)) {
      throw Error(ErrorCode::InvalidSignalPlan, "phase durations must be positive");
    }
    if (amber > p.duration) {
      throw Error(ErrorCode::InvalidSignalPlan, "amber longer than a green phase");
    }
  }
}

SignalPlan SignalPlan::two_phase(double cycle, double all_red, double amber) {
  const double green = cycle / 2.0 - all_red;
  SignalPlan plan{{Phase{Axis::NS, green, all_red}, Phase{Axis::EW, green, all_red}}, amber};
  plan.validate();
  return plan;
}

SignalState signal_state(const SignalPlan& plan, double t) {
  const double cycle = plan.cycle();
  double local = std::fmod(std::max(t, 0.0), cycle);
  SignalState state;
  for (const auto& p : plan.phases) {
    if (local < p.duration) {
      const Light light = local >= p.duration - plan.amber ? Light::Amber : Light::Green;
      (p.green == Axis::NS ? state.ns : state.ew) = light;
      return state;
    }
    local -= p.duration;
    if (local < p.all_red) return state;
    local -= p.all_red;
  }
  return state;
}

std::string_view to_string(TurnKind k) noexcept {
  switch (k) {
    case TurnKind::Direct: return "direct";
    case TurnKind::Indirect: return "indirect";
    case TurnKind::Through: return "through";
  }
  return "?";
}

double Trajectory::length() const noexcept {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += distance(polyline[i - 1], polyline[i]);
  return len;
}

bool Box::contains(Vec2 p, double eps) const noexcept {
  return p.x >= min_x - eps && p.x <= max_x + eps && p.y >= min_y - eps && p.y <= max_y + eps;
}

// --- network --------------------------------------------------------------

struct Network::Frame {
  int turns = 0;
  const Approach* entry = nullptr;
  const Approach* exit = nullptr;
  const Approach* ahead = nullptr;
  double hx = 0.0;  // conflict half-extent across the entry road
  double hy = 0.0;  // conflict half-extent along the entry road
  double cw = 0.0;

  Vec2 to_world(Vec2 local) const noexcept { return rotate_quarter(local, turns); }
};

Network::Frame Network::frame(Heading from) const noexcept {
  Frame f;
  f.turns = frame_turns(from);
  f.entry = &approaches_[slot(from)];
  f.exit = &approaches_[slot(left_exit(from))];
  f.ahead = &approaches_[slot(opposite(from))];
  const auto& right = approaches_[slot(opposite(left_exit(from)))];
  f.hx = std::max(f.entry->half_width(), f.ahead->half_width());
  f.hy = std::max(f.exit->half_width(), right.half_width());
  f.cw = geometry_.crosswalk_width;
  return f;
}

Network Network::build_four_way(std::span<const Approach> approaches, SignalPlan signal,
                                GeometryOptions geometry) {
  if (approaches.size() != 4) {
    throw Error(ErrorCode::InvalidGeometry, "a four-way intersection needs exactly 4 approaches");
  }
  Network net;
  std::array<bool, 4> seen{};
  for (const auto& a : approaches) {
    if (seen[slot(a.heading)]) {
      throw Error(ErrorCode::InvalidGeometry,
                  "duplicate approach heading " + std::string(to_string(a.heading)));
    }
    seen[slot(a.heading)] = true;
    if (a.lane_count < 1) throw Error(ErrorCode::InvalidGeometry, "lane_count must be >= 1");
    if (!(a.lane_width > 0.0) || !(a.approach_length > 0.0) ||
        (a.has_bike_lane && !(a.bike_lane_width > 0.0))) {
      throw Error(ErrorCode::InvalidGeometry, "approach dimensions must be positive");
    }
    net.approaches_[slot(a.heading)] = a;
  }
  if (!(geometry.crosswalk_width >= 0.0) || !(geometry.sample_spacing > 0.0) ||
      !(geometry.region_margin >= 0.0)) {
    throw Error(ErrorCode::InvalidGeometry, "geometry options must be non-negative");
  }
  signal.validate();
  net.signal_ = std::move(signal);
  net.geometry_ = geometry;
  return net;
}

const Approach& Network::approach(Heading h) const noexcept { return approaches_[slot(h)]; }

Box Network::conflict_area() const noexcept {
  const double x = std::max(approach(Heading::N).half_width(), approach(Heading::S).half_width());
  const double y = std::max(approach(Heading::E).half_width(), approach(Heading::W).half_width());
  return {-x, -y, x, y};
}

Box Network::timing_region() const noexcept {
  auto b = conflict_area();
  const double m = geometry_.region_margin;
  return {b.min_x - m, b.min_y - m, b.max_x + m, b.max_y + m};
}

bool Network::in_bounds(Vec2 p, double eps) const noexcept {
  const auto core = conflict_area();
  if (core.contains(p, eps)) return true;
  const double cw = geometry_.crosswalk_width;
  for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
    const auto f = frame(h);
    const Vec2 local = rotate_quarter(p, -f.turns);
    const double hw = f.entry->half_width();
    if (std::abs(local.x) <= hw + eps && local.y <= -f.hy + eps &&
        local.y >= -(f.hy + cw + f.entry->approach_length) - eps) {
      return true;
    }
  }
  return false;
}

Vec2 Network::stop_line_point(Heading from) const noexcept {
  const auto f = frame(from);
  return f.to_world({f.entry->riding_offset(), -(f.hy + f.cw)});
}

Vec2 Network::exit_point(Heading from) const noexcept {
  const auto f = frame(from);
  return f.to_world({-(f.hx + f.cw), f.exit->riding_offset()});
}

Vec2 Network::waiting_node(Heading from) const noexcept {
  const auto f = frame(from);
  return f.to_world({f.entry->riding_offset(), f.exit->riding_offset()});
}

Vec2 Network::approach_start(Heading from) const noexcept {
  const auto f = frame(from);
  return f.to_world({f.entry->riding_offset(), -(f.hy + f.cw + f.entry->approach_length)});
}

Vec2 Network::departure_end(Heading from, TurnKind kind) const noexcept {
  const auto f = frame(from);
  if (kind == TurnKind::Through) {
    return f.to_world({f.ahead->riding_offset(), f.hy + f.cw + f.ahead->approach_length});
  }
  return f.to_world({-(f.hx + f.cw + f.exit->approach_length), f.exit->riding_offset()});
}

double Network::distance_to_riding_line(Vec2 p, Heading leg, bool inbound) const noexcept {
  const auto f = frame(leg);
  const Vec2 local = rotate_quarter(p, -f.turns);
  const double r = f.entry->riding_offset();
  return inbound ? std::abs(local.x - r) : std::abs(local.x + r);
}

Trajectory synthesize_direct_turn(const Network& net, Heading from) {
  const Vec2 p0 = net.stop_line_point(from);
  const Vec2 p3 = net.exit_point(from);
  const Vec2 corner = net.waiting_node(from);  // where the two riding lines cross
  // Control points sit on the entry and exit tangents, 40 % of the way from
  // the stop line towards the corner and 60 % of the way from the corner
  // towards the exit.
  const Vec2 p1 = p0 + 0.4 * (corner - p0);
  const Vec2 p2 = corner + 0.6 * (p3 - corner);
  Trajectory t;
  t.kind = TurnKind::Direct;
  t.from = from;
  t.polyline = sample_bezier(p0, p1, p2, p3, net.geometry().sample_spacing);
  t.stop_line_index = 0;
  return t;
}

Trajectory synthesize_indirect_turn(const Network& net, Heading from) {
  const Vec2 p0 = net.stop_line_point(from);
  const Vec2 node = net.waiting_node(from);
  const Vec2 p3 = net.exit_point(from);
  const double spacing = net.geometry().sample_spacing;
  Trajectory t;
  t.kind = TurnKind::Indirect;
  t.from = from;
  t.polyline.push_back(p0);
  append_segment(t.polyline, p0, node, spacing);
  t.waiting_node_index = t.polyline.size() - 1;
  append_segment(t.polyline, node, p3, spacing);
  t.stop_line_index = 0;
  return t;
}

Trajectory synthesize_through(const Network& net, Heading from) {
  const Vec2 p0 = net.stop_line_point(from);
  const auto region = net.conflict_area();
  const Vec2 far_end = net.departure_end(from, TurnKind::Through);
  // Far edge of the crosswalk on the departure leg.
  const double cw = net.geometry().crosswalk_width;
  const Vec2 dir = (1.0 / distance(p0, far_end)) * (far_end - p0);
  const double half = std::abs(dir.x) > std::abs(dir.y) ? region.max_x : region.max_y;
  const double along = half + cw;
  // Project onto the departure riding line at distance `along` from centre.
  const int turns = frame_turns(from);
  const Vec2 local_far = rotate_quarter(far_end, -turns);
  const Vec2 end = rotate_quarter({local_far.x, along}, turns);
  Trajectory t;
  t.kind = TurnKind::Through;
  t.from = from;
  t.polyline.push_back(p0);
  append_segment(t.polyline, p0, end, net.geometry().sample_spacing);
  return t;
}

// --- routes ---------------------------------------------------------------

Vec2 Route::point_at(double s) const noexcept {
  if (polyline.empty()) return {};
  if (s <= 0.0) return polyline.front();
  if (s >= arc.back()) return polyline.back();
  const auto it = std::upper_bound(arc.begin(), arc.end(), s);
  const auto i = static_cast<std::size_t>(it - arc.begin());
  const double seg = arc[i] - arc[i - 1];
  const double f = seg > 0.0 ? (s - arc[i - 1]) / seg : 0.0;
  return polyline[i - 1] + f * (polyline[i] - polyline[i - 1]);
}

namespace {

// Parameter interval [t0, t1] of segment a->b inside the box (Liang-Barsky).
std::optional<std::pair<double, double>> clip(Vec2 a, Vec2 b, const Box& box) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[] = {-d.x, d.x, -d.y, d.y};
  const double q[] = {a.x - box.min_x, box.max_x - a.x, a.y - box.min_y, box.max_y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
  }
  if (t0 > t1) return std::nullopt;
  return std::make_pair(t0, t1);
}

}  // namespace

Route build_route(const Network& net, Heading from, TurnKind kind) {
  const Trajectory traj = kind == TurnKind::Direct     ? synthesize_direct_turn(net, from)
                          : kind == TurnKind::Indirect ? synthesize_indirect_turn(net, from)
                                                       : synthesize_through(net, from);
  Route r;
  r.from = from;
  r.kind = kind;
  r.polyline.push_back(net.approach_start(from));
  r.polyline.insert(r.polyline.end(), traj.polyline.begin(), traj.polyline.end());
  r.polyline.push_back(net.departure_end(from, kind));
  r.arc.assign(r.polyline.size(), 0.0);
  for (std::size_t i = 1; i < r.polyline.size(); ++i) {
    r.arc[i] = r.arc[i - 1] + distance(r.polyline[i - 1], r.polyline[i]);
  }
  r.stop_line_s = r.arc[traj.stop_line_index + 1];
  if (traj.waiting_node_index) r.waiting_s = r.arc[*traj.waiting_node_index + 1];

  const auto region = net.timing_region();
  bool entered = false;
  for (std::size_t i = 1; i < r.polyline.size(); ++i) {
    const auto span = clip(r.polyline[i - 1], r.polyline[i], region);
    if (!span) continue;
    const double seg = r.arc[i] - r.arc[i - 1];
    if (!entered) {
      r.region_enter_s = r.arc[i - 1] + span->first * seg;
      entered = true;
    }
    r.region_exit_s = r.arc[i - 1] + span->second * seg;
  }
  return r;
}

}  // namespace cyclesim::network
