#include "cyclesim/simcore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "cyclesim/error.hpp"

namespace cyclesim::sim {

using network::Axis;
using network::Light;
using network::Route;

std::string_view to_string(ParamSource s) noexcept {
  return s == ParamSource::Scalar ? "scalar" : "fitted";
}

std::optional<ParamSource> param_source_from_string(std::string_view s) noexcept {
  if (s == "scalar") return ParamSource::Scalar;
  if (s == "fitted") return ParamSource::Fitted;
  return std::nullopt;
}

std::string_view to_string(CyclistPhase p) noexcept {
  switch (p) {
    case CyclistPhase::Approaching: return "approaching";
    case CyclistPhase::Waiting: return "waiting";
    case CyclistPhase::Crossing: return "crossing";
    case CyclistPhase::Done: return "done";
  }
  return "?";
}

std::optional<CyclistPhase> cyclist_phase_from_string(std::string_view s) noexcept {
  for (auto p : {CyclistPhase::Approaching, CyclistPhase::Waiting, CyclistPhase::Crossing,
                 CyclistPhase::Done}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

CyclistParams sample_cyclist_params(const ParamModel& model, Rng& rng, std::size_t* rejections) {
  CyclistParams p = model.defaults;
  if (model.source == ParamSource::Scalar) return p;
  if (!model.accel || !model.speed) {
    throw Error(ErrorCode::InvalidConfig, "fitted parameter source needs both distributions");
  }
  constexpr int kMaxAttempts = 10'000;
  auto draw = [&](const distfit::Distribution& d, auto accept, const char* what) {
    for (int i = 0; i < kMaxAttempts; ++i) {
      const double x = distfit::quantile(d, rng.uniform());
      if (accept(x)) return x;
      if (rejections) ++*rejections;
    }
    throw Error(ErrorCode::InvalidConfig,
                std::string("truncation leaves almost no mass for ") + what);
  };
  p.a_max = draw(*model.accel, [](double a) { return a > 0.0 && a <= kMaxAMax; }, "a_max");
  p.v_max = draw(*model.speed, [](double v) { return v >= kMinVMax; }, "v_max");
  return p;
}

TurnKind choose_turn(Rng& rng, double p_indirect, bool lane_only) {
  const double u = rng.uniform();
  if (lane_only) return TurnKind::Indirect;
  return u < p_indirect ? TurnKind::Indirect : TurnKind::Direct;
}

namespace {

double stopping_speed(double g, double leader_speed, double b, double tau) {
  g = std::max(g, 0.0);
  const double krauss = -b * tau + std::sqrt(b * b * tau * tau + leader_speed * leader_speed + 2.0 * b * g);
  const double one_step = g / tau;
  return std::max(0.0, std::min(one_step, std::max(krauss, std::min(one_step, b * tau))));
}

}  // namespace

double safe_speed(const std::optional<Leader>& leader, const CyclistParams& p, double step) {
  if (!leader) return p.v_max;
  return stopping_speed(leader->gap - p.min_gap, leader->speed, p.b_max, step);
}

Scenario Scenario::default_four_way() {
  Scenario s;
  s.name = "default";
  for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
    network::Approach a;
    a.heading = h;
    a.lane_count = 2;
    s.approaches.push_back(a);
  }
  s.signal = network::SignalPlan::two_phase(60.0, 3.0, 3.0);
  return s;
}

void SimConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (!(step > 0.0)) bad("step must be > 0");
  if (!(duration >= 0.0) || !(cooldown >= 0.0)) bad("duration and cooldown must be >= 0");
  if (!(demand >= 0.0)) bad("demand must be >= 0");
  if (!(p_indirect >= 0.0 && p_indirect <= 1.0)) bad("p_indirect must lie in [0, 1]");
  if (!(through_fraction >= 0.0 && through_fraction <= 1.0)) bad("through_fraction must lie in [0, 1]");
  const auto& d = params.defaults;
  if (!(d.a_max > 0.0) || !(d.v_max > 0.0) || !(d.b_max > 0.0) || !(d.min_gap > 0.0) ||
      !(d.length > 0.0)) {
    bad("cyclist parameters must be positive");
  }
  if (params.source == ParamSource::Fitted && (!params.accel || !params.speed)) {
    bad("fitted parameter source needs accel and speed distributions");
  }
  if (!(emergency_decel > 0.0)) bad("emergency_decel must be > 0");
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<Heading, 4> kHeadings = {Heading::N, Heading::E, Heading::S, Heading::W};
constexpr double kEps = 1e-9;

std::size_t hidx(Heading h) { return static_cast<std::size_t>(h); }
std::size_t kidx(TurnKind k) { return static_cast<std::size_t>(k); }

struct Arrival {
  double time;
  TurnKind kind;
  CyclistParams params;
};

enum class Hold { None, Stop };

}  // namespace

struct Simulation::Impl {
  Scenario scenario;
  SimConfig cfg;
  network::Network net;
  bool lane_only;
  std::array<std::array<Route, 3>, 4> routes;

  std::array<std::vector<CyclistState>, 4> lanes;
  std::array<std::deque<Arrival>, 4> queues;
  std::array<double, 4> next_arrival{};
  std::vector<Rng> arrival_rng;
  Rng params_rng;
  Rng turn_rng;
  Rng through_rng;

  std::size_t step_index = 0;
  std::size_t arrivals = 0;
  TrajectoryLog log;

  Impl(Scenario sc, SimConfig c)
      : scenario(std::move(sc)),
        cfg(std::move(c)),
        net(network::Network::build_four_way(scenario.approaches, scenario.signal, scenario.geometry)),
        lane_only(cfg.lane_only.value_or(scenario.lane_only)),
        params_rng(Rng::stream(cfg.seed, "params")),
        turn_rng(Rng::stream(cfg.seed, "turn")),
        through_rng(Rng::stream(cfg.seed, "through")) {
    cfg.validate();
    for (Heading h : kHeadings) {
      for (TurnKind k : {TurnKind::Direct, TurnKind::Indirect, TurnKind::Through}) {
        routes[hidx(h)][kidx(k)] = network::build_route(net, h, k);
      }
      arrival_rng.push_back(Rng::stream(cfg.seed, std::string("arrivals/") +
                                                      std::string(network::to_string(h))));
    }
    const double rate = cfg.demand / 3600.0;
    for (Heading h : kHeadings) {
      const bool on = std::find(cfg.active.begin(), cfg.active.end(), h) != cfg.active.end();
      next_arrival[hidx(h)] = (on && rate > 0.0) ? arrival_rng[hidx(h)].exponential(rate)
                                                 : std::numeric_limits<double>::infinity();
    }
  }

  double now() const { return static_cast<double>(step_index) * cfg.step; }

  const Route& route_of(const CyclistState& c) const { return routes[hidx(c.from)][kidx(c.kind)]; }

  CyclistSummary& summary(std::uint64_t id) { return log.cyclists[id]; }

  // Leader relation on one approach: paths coincide up to the stop line, so
  // a cyclist ahead is relevant while its rear is still on the shared part,
  // or always when it follows the same route.
  static bool follows(const CyclistState& me, const CyclistState& ahead, double stop_line_s) {
    return ahead.kind == me.kind || ahead.s - ahead.params.length < stop_line_s;
  }

  std::optional<Leader> leader_for(const CyclistState& me, const std::vector<CyclistState>& lane,
                                   std::size_t ahead_count, double stop_line_s) const {
    std::optional<Leader> best;
    for (std::size_t j = 0; j < ahead_count; ++j) {
      const auto& o = lane[j];
      if (o.id == me.id || !follows(me, o, stop_line_s)) continue;
      const double gap = o.s - o.params.length - me.s;
      if (!best || gap < best->gap) best = Leader{gap, o.speed};
    }
    return best;
  }

  void push_record(const CyclistState& c, double t, double accel) {
    const auto p = route_of(c).point_at(c.s);
    log.records.push_back(StepRecord{t, c.id, c.s, p.x, p.y, c.speed, accel, c.phase});
  }

  std::uint64_t insert(Heading from, TurnKind kind, const CyclistParams& params, double arrival,
                       double s, double speed) {
    const std::uint64_t id = log.cyclists.size();
    CyclistState c;
    c.id = id;
    c.from = from;
    c.kind = kind;
    c.params = params;
    c.s = s;
    c.speed = speed;
    CyclistSummary sum;
    sum.id = id;
    sum.from = from;
    sum.kind = kind;
    sum.arrival_s = arrival;
    sum.spawn_s = now();
    sum.params = params;
    sum.max_speed = speed;
    log.cyclists.push_back(sum);
    ++log.spawned;
    lanes[hidx(from)].push_back(c);
    push_record(c, now(), 0.0);
    return id;
  }

  bool has_room(Heading h, const CyclistParams& p) const {
    for (const auto& o : lanes[hidx(h)]) {
      if (o.s - o.params.length < p.min_gap - kEps) return false;
    }
    return true;
  }

  void generate_arrivals() {
    const double t = now();
    const double rate = cfg.demand / 3600.0;
    for (Heading h : kHeadings) {
      auto& next = next_arrival[hidx(h)];
      while (next <= t && next < cfg.duration && !arrivals_exhausted()) {
        Arrival a;
        a.time = next;
        const double u = through_rng.uniform();
        const TurnKind turn = choose_turn(turn_rng, cfg.p_indirect, lane_only);
        a.kind = u < cfg.through_fraction ? TurnKind::Through : turn;
        a.params = sample_cyclist_params(cfg.params, params_rng, &log.param_rejections);
        queues[hidx(h)].push_back(a);
        ++arrivals;
        next += arrival_rng[hidx(h)].exponential(rate);
      }
      if (next >= cfg.duration || arrivals_exhausted()) next = std::numeric_limits<double>::infinity();
    }
  }

  bool arrivals_exhausted() const { return cfg.max_arrivals && arrivals >= *cfg.max_arrivals; }

  void spawn_queued() {
    for (Heading h : kHeadings) {
      auto& q = queues[hidx(h)];
      while (!q.empty() && has_room(h, q.front().params)) {
        const auto a = q.front();
        q.pop_front();
        double speed = 0.0;
        if (cfg.depart == DepartSpeed::Max) {
          CyclistState probe;
          probe.id = std::numeric_limits<std::uint64_t>::max();
          probe.kind = a.kind;
          probe.params = a.params;
          const auto& lane = lanes[hidx(h)];
          const auto lead = leader_for(probe, lane, lane.size(), routes[hidx(h)][0].stop_line_s);
          speed = std::min(a.params.v_max, safe_speed(lead, a.params, cfg.step));
        }
        insert(h, a.kind, a.params, a.time, 0.0, speed);
      }
    }
  }

  // Whether a signal ahead forces a stop at distance `g` (already net of any
  // standstill gap). Amber stops only those who can do so comfortably.
  static bool must_stop(Light light, double g, const CyclistState& c, double tau) {
    if (light == Light::Green) return false;
    if (light == Light::Red) return true;
    const double v_stop = stopping_speed(g, 0.0, c.params.b_max, tau);
    return v_stop >= c.speed - c.params.b_max * tau - kEps;
  }

  void advance(CyclistState& c, const std::optional<Leader>& lead, const network::SignalState& sig,
               double t) {
    const double tau = cfg.step;
    const auto& r = route_of(c);
    const Axis own = network::axis_of(c.from);
    const auto& p = c.params;

    const double v_free = std::min(c.speed + p.a_max * tau, p.v_max);
    double v = v_free;
    if (lead) v = std::min(v, safe_speed(lead, p, tau));

    bool held = false;
    if (c.s < r.stop_line_s) {
      const double g = r.stop_line_s - c.s - p.min_gap;
      if (must_stop(sig.of(own), std::max(g, 0.0), c, tau)) {
        v = std::min(v, stopping_speed(g, 0.0, p.b_max, tau));
        held = true;
      }
    }
    if (r.waiting_s && c.s < *r.waiting_s + kEps) {
      const double g = std::max(*r.waiting_s - c.s, 0.0);
      const Light perp = sig.of(network::perpendicular(own));
      const bool at_node = g <= 1e-6 && c.speed <= kEps;
      bool stop = must_stop(perp, g, c, tau);
      if (perp == Light::Green && at_node && !c.node_green_seen) {
        c.node_green_seen = true;  // start-up delay: leave on the next step
        stop = true;
      }
      if (stop) {
        v = std::min(v, stopping_speed(g, 0.0, p.b_max, tau));
        held = true;
      }
    }

    v = std::max(v, 0.0);
    auto& sum = summary(c.id);
    if (v < v_free - kEps) sum.obstructed = true;

    const double accel = (v - c.speed) / tau;
    const double s_old = c.s;
    const double s_new = c.s + v * tau;
    auto stamp = [&](double mark, std::optional<double>& slot) {
      if (!slot && s_old < mark && s_new >= mark) slot = t + tau * (mark - s_old) / (s_new - s_old);
    };
    stamp(r.region_enter_s, sum.entry_s);
    stamp(r.region_exit_s, sum.exit_s);

    c.s = s_new;
    c.speed = v;
    if (c.s >= r.length()) {
      c.phase = CyclistPhase::Done;
    } else if (held && v <= kEps) {
      c.phase = CyclistPhase::Waiting;
    } else {
      c.phase = c.s < r.stop_line_s ? CyclistPhase::Approaching : CyclistPhase::Crossing;
    }
    sum.max_speed = std::max(sum.max_speed, v);
    sum.max_accel = std::max(sum.max_accel, accel);
    push_record(c, t + tau, accel);
  }

  void step() {
    const double t = now();
    generate_arrivals();
    spawn_queued();
    const auto sig = network::signal_state(net.signal(), t);

    for (Heading h : kHeadings) {
      auto& lane = lanes[hidx(h)];
      std::stable_sort(lane.begin(), lane.end(), [](const CyclistState& a, const CyclistState& b) {
        return a.s > b.s || (a.s == b.s && a.id < b.id);
      });
      const double stop_line_s = routes[hidx(h)][0].stop_line_s;
      for (std::size_t i = 0; i < lane.size(); ++i) {
        const auto lead = leader_for(lane[i], lane, i, stop_line_s);
        if (lead && lead->gap < -1e-6) {
          throw Error(ErrorCode::InternalInconsistency,
                      "negative gap " + std::to_string(lead->gap) + " behind cyclist ahead of " +
                          std::to_string(lane[i].id));
        }
        advance(lane[i], lead, sig, t);
      }
      for (const auto& c : lane) {
        if (c.phase == CyclistPhase::Done) {
          summary(c.id).completed = true;
          ++log.completed;
        }
      }
      std::erase_if(lane, [](const CyclistState& c) { return c.phase == CyclistPhase::Done; });
    }
    ++step_index;
    refresh_counts();
  }

  void refresh_counts() {
    log.in_network = 0;
    log.pending = 0;
    for (Heading h : kHeadings) {
      log.in_network += lanes[hidx(h)].size();
      log.pending += queues[hidx(h)].size();
    }
    log.end_time = now();
  }

  bool finished() const { return now() >= cfg.duration + cfg.cooldown - kEps; }
};

Simulation::Simulation(Scenario scenario, SimConfig config)
    : impl_(std::make_unique<Impl>(std::move(scenario), std::move(config))) {}
Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

std::uint64_t Simulation::add_cyclist(Heading from, TurnKind kind, const CyclistParams& params,
                                      double s, double speed) {
  const auto id = impl_->insert(from, kind, params, impl_->now(), s, speed);
  impl_->refresh_counts();
  return id;
}

void Simulation::step() { impl_->step(); }

void Simulation::run_to_end() {
  while (!impl_->finished()) impl_->step();
}

double Simulation::time() const noexcept { return impl_->now(); }
bool Simulation::finished() const noexcept { return impl_->finished(); }
const network::Network& Simulation::network() const noexcept { return impl_->net; }

const network::Route& Simulation::route(Heading from, TurnKind kind) const {
  return impl_->routes[hidx(from)][kidx(kind)];
}

std::vector<CyclistState> Simulation::active() const {
  std::vector<CyclistState> out;
  for (const auto& lane : impl_->lanes) out.insert(out.end(), lane.begin(), lane.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

const TrajectoryLog& Simulation::log() const noexcept { return impl_->log; }
TrajectoryLog Simulation::take_log() { return std::move(impl_->log); }

TrajectoryLog run(const Scenario& scenario, const SimConfig& config) {
  Simulation sim(scenario, config);
  sim.run_to_end();
  return sim.take_log();
}

}  // namespace cyclesim::sim
