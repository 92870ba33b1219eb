#include <istream>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "cyclesim/error.hpp"
#include "cyclesim/simcore.hpp"
#include "text_util.hpp"

namespace cyclesim::sim {

using nlohmann::json;

namespace {

constexpr std::string_view kStepsTag = "#schema=cyclesim.steps,version=1";
constexpr std::string_view kStepsHeader = "t,id,s,x,y,speed,accel,phase";

json parse(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string(what) + ": " + e.what());
  }
}

void check_schema(const json& j, std::string_view schema) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != schema) {
    throw Error(ErrorCode::VersionMismatch, "expected schema " + std::string(schema));
  }
  if (!j.contains("schema_version") || j.at("schema_version") != kSchemaVersion) {
    throw Error(ErrorCode::VersionMismatch,
                std::string(schema) + " version " +
                    (j.contains("schema_version") ? j.at("schema_version").dump() : "missing") +
                    ", expected " + std::to_string(kSchemaVersion));
  }
}

void only_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(where) + " must be an object");
  const std::set<std::string_view> ok(allowed);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + it.key() + "' in " + std::string(where));
    }
  }
}

Heading heading_of(const json& j) {
  const auto h = network::heading_from_string(j.get<std::string>());
  if (!h) throw Error(ErrorCode::InvalidConfig, "bad heading " + j.dump());
  return *h;
}

TurnKind kind_of(const std::string& s) {
  for (auto k : {TurnKind::Direct, TurnKind::Indirect, TurnKind::Through}) {
    if (network::to_string(k) == s) return k;
  }
  throw Error(ErrorCode::MalformedFile, "bad turn kind " + s);
}

json params_json(const CyclistParams& p) {
  return {{"a_max", p.a_max}, {"v_max", p.v_max}, {"b_max", p.b_max},
          {"min_gap", p.min_gap}, {"length", p.length}};
}

CyclistParams params_from(const json& j, CyclistParams p = {}) {
  only_keys(j, {"a_max", "v_max", "b_max", "min_gap", "length"}, "cyclist parameters");
  p.a_max = j.value("a_max", p.a_max);
  p.v_max = j.value("v_max", p.v_max);
  p.b_max = j.value("b_max", p.b_max);
  p.min_gap = j.value("min_gap", p.min_gap);
  p.length = j.value("length", p.length);
  return p;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<StepRecord>& records) {
  using detail::format_double;
  out << kStepsTag << '\n' << kStepsHeader << '\n';
  for (const auto& r : records) {
    out << format_double(r.t) << ',' << r.id << ',' << format_double(r.s) << ','
        << format_double(r.x) << ',' << format_double(r.y) << ',' << format_double(r.speed) << ','
        << format_double(r.accel) << ',' << to_string(r.phase) << '\n';
  }
}

std::vector<StepRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kStepsTag) {
    throw Error(ErrorCode::VersionMismatch, "step log lacks '" + std::string(kStepsTag) + "'");
  }
  if (!std::getline(in, line) || detail::trim(line) != kStepsHeader) {
    throw Error(ErrorCode::MalformedFile, "unexpected step log header");
  }
  std::vector<StepRecord> out;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(detail::trim(line), ',');
    auto fail = [&] {
      throw Error(ErrorCode::MalformedFile, "step log line " + std::to_string(lineno));
    };
    if (f.size() != 8) fail();
    StepRecord r;
    auto num = [&](std::string_view s) {
      auto v = detail::parse_number<double>(s);
      if (!v) fail();
      return *v;
    };
    r.t = num(f[0]);
    const auto id = detail::parse_number<std::uint64_t>(f[1]);
    if (!id) fail();
    r.id = *id;
    r.s = num(f[2]);
    r.x = num(f[3]);
    r.y = num(f[4]);
    r.speed = num(f[5]);
    r.accel = num(f[6]);
    const auto ph = cyclist_phase_from_string(f[7]);
    if (!ph) fail();
    r.phase = *ph;
    out.push_back(r);
  }
  return out;
}

std::string summaries_to_json(const TrajectoryLog& log, std::string_view metadata_json) {
  json j;
  j["schema"] = "cyclesim.simlog";
  j["schema_version"] = kSchemaVersion;
  j["metadata"] = parse(metadata_json, "log metadata");
  j["end_time"] = log.end_time;
  j["spawned"] = log.spawned;
  j["completed"] = log.completed;
  j["in_network"] = log.in_network;
  j["pending"] = log.pending;
  j["param_rejections"] = log.param_rejections;
  json list = json::array();
  for (const auto& c : log.cyclists) {
    list.push_back({{"id", c.id},
                    {"from", network::to_string(c.from)},
                    {"kind", network::to_string(c.kind)},
                    {"arrival_s", c.arrival_s},
                    {"spawn_s", c.spawn_s},
                    {"params", params_json(c.params)},
                    {"entry_s", opt(c.entry_s)},
                    {"exit_s", opt(c.exit_s)},
                    {"crossing_duration", opt(c.crossing_duration())},
                    {"max_speed", c.max_speed},
                    {"max_accel", c.max_accel},
                    {"obstructed", c.obstructed},
                    {"completed", c.completed}});
  }
  j["cyclists"] = std::move(list);
  return j.dump(1);
}

TrajectoryLog summaries_from_json(std::string_view text) {
  const auto j = parse(text, "simulation log");
  check_schema(j, "cyclesim.simlog");
  try {
    TrajectoryLog log;
    log.end_time = j.at("end_time").get<double>();
    log.spawned = j.at("spawned").get<std::size_t>();
    log.completed = j.at("completed").get<std::size_t>();
    log.in_network = j.at("in_network").get<std::size_t>();
    log.pending = j.at("pending").get<std::size_t>();
    log.param_rejections = j.at("param_rejections").get<std::size_t>();
    for (const auto& c : j.at("cyclists")) {
      CyclistSummary s;
      s.id = c.at("id").get<std::uint64_t>();
      s.from = heading_of(c.at("from"));
      s.kind = kind_of(c.at("kind").get<std::string>());
      s.arrival_s = c.at("arrival_s").get<double>();
      s.spawn_s = c.at("spawn_s").get<double>();
      const auto& p = c.at("params");
      s.params = CyclistParams{p.at("a_max"), p.at("v_max"), p.at("b_max"), p.at("min_gap"),
                               p.at("length")};
      s.entry_s = opt_from(c, "entry_s");
      s.exit_s = opt_from(c, "exit_s");
      s.max_speed = c.at("max_speed").get<double>();
      s.max_accel = c.at("max_accel").get<double>();
      s.obstructed = c.at("obstructed").get<bool>();
      s.completed = c.at("completed").get<bool>();
      log.cyclists.push_back(s);
    }
    return log;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("simulation log: ") + e.what());
  }
}

// --- scenarios ------------------------------------------------------------

namespace {

json signal_json(const network::SignalPlan& plan) {
  json phases = json::array();
  for (const auto& p : plan.phases) {
    phases.push_back({{"green", p.green == network::Axis::NS ? "NS" : "EW"},
                      {"duration", p.duration},
                      {"all_red", p.all_red}});
  }
  return {{"cycle", plan.cycle()}, {"amber", plan.amber}, {"phases", phases}};
}

network::SignalPlan signal_from(const json& j) {
  only_keys(j, {"cycle", "amber", "all_red", "phases"}, "signal");
  const double amber = j.value("amber", 3.0);
  if (!j.contains("phases")) {
    return network::SignalPlan::two_phase(j.value("cycle", 60.0), j.value("all_red", 3.0), amber);
  }
  network::SignalPlan plan;
  plan.amber = amber;
  for (const auto& p : j.at("phases")) {
    only_keys(p, {"green", "duration", "all_red"}, "signal phase");
    const auto g = p.at("green").get<std::string>();
    if (g != "NS" && g != "EW") {
      throw Error(ErrorCode::InvalidSignalPlan, "phase must turn exactly one axis green, got " + g);
    }
    plan.phases.push_back(network::Phase{g == "NS" ? network::Axis::NS : network::Axis::EW,
                                         p.at("duration").get<double>(), p.value("all_red", 0.0)});
  }
  plan.validate();
  if (j.contains("cycle") && std::abs(j.at("cycle").get<double>() - plan.cycle()) > 1e-9) {
    throw Error(ErrorCode::InvalidSignalPlan, "phase durations do not sum to the cycle");
  }
  return plan;
}

json dist_json(const std::optional<distfit::Distribution>& d) {
  return d ? json::parse(distfit::distribution_to_json(*d)) : json(nullptr);
}

std::optional<distfit::Distribution> dist_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return distfit::distribution_from_json(j.dump());
}

json sim_json(const SimConfig& c) {
  json active = json::array();
  for (auto h : c.active) active.push_back(network::to_string(h));
  json j = {{"step", c.step},
            {"duration", c.duration},
            {"cooldown", c.cooldown},
            {"seed", c.seed},
            {"demand", c.demand},
            {"active", active},
            {"p_indirect", c.p_indirect},
            {"through_fraction", c.through_fraction},
            {"param_source", to_string(c.params.source)},
            {"defaults", params_json(c.params.defaults)},
            {"accel_dist", dist_json(c.params.accel)},
            {"speed_dist", dist_json(c.params.speed)},
            {"depart_speed", c.depart == DepartSpeed::Max ? "max" : "zero"},
            {"emergency_decel", c.emergency_decel}};
  j["lane_only"] = c.lane_only ? json(*c.lane_only) : json(nullptr);
  j["max_arrivals"] = c.max_arrivals ? json(*c.max_arrivals) : json(nullptr);
  return j;
}

SimConfig sim_from(const json& j, SimConfig c) {
  only_keys(j,
            {"step", "duration", "cooldown", "seed", "demand", "active", "p_indirect",
             "through_fraction", "param_source", "defaults", "accel_dist", "speed_dist",
             "depart_speed", "emergency_decel", "lane_only", "max_arrivals"},
            "sim");
  c.step = j.value("step", c.step);
  c.duration = j.value("duration", c.duration);
  c.cooldown = j.value("cooldown", c.cooldown);
  c.seed = j.value("seed", c.seed);
  c.demand = j.value("demand", c.demand);
  if (j.contains("active")) {
    c.active.clear();
    for (const auto& h : j.at("active")) c.active.push_back(heading_of(h));
  }
  c.p_indirect = j.value("p_indirect", c.p_indirect);
  c.through_fraction = j.value("through_fraction", c.through_fraction);
  if (j.contains("param_source")) {
    const auto src = param_source_from_string(j.at("param_source").get<std::string>());
    if (!src) throw Error(ErrorCode::InvalidConfig, "param_source must be scalar or fitted");
    c.params.source = *src;
  }
  if (j.contains("defaults")) c.params.defaults = params_from(j.at("defaults"), c.params.defaults);
  if (j.contains("accel_dist")) c.params.accel = dist_from(j.at("accel_dist"));
  if (j.contains("speed_dist")) c.params.speed = dist_from(j.at("speed_dist"));
  if (j.contains("depart_speed")) {
    const auto d = j.at("depart_speed").get<std::string>();
    if (d != "zero" && d != "max") throw Error(ErrorCode::InvalidConfig, "depart_speed must be zero or max");
    c.depart = d == "max" ? DepartSpeed::Max : DepartSpeed::Zero;
  }
  c.emergency_decel = j.value("emergency_decel", c.emergency_decel);
  if (j.contains("lane_only")) {
    c.lane_only = j.at("lane_only").is_null() ? std::nullopt
                                              : std::optional<bool>(j.at("lane_only").get<bool>());
  }
  if (j.contains("max_arrivals")) {
    c.max_arrivals = j.at("max_arrivals").is_null()
                         ? std::nullopt
                         : std::optional<std::size_t>(j.at("max_arrivals").get<std::size_t>());
  }
  return c;
}

template <class F>
auto guarded(F&& f, std::string_view what) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json approaches = json::array();
  for (const auto& a : s.approaches) {
    approaches.push_back({{"heading", network::to_string(a.heading)},
                          {"lane_count", a.lane_count},
                          {"lane_width", a.lane_width},
                          {"approach_length", a.approach_length},
                          {"has_bike_lane", a.has_bike_lane},
                          {"bike_lane_width", a.bike_lane_width}});
  }
  json j = {{"schema", "cyclesim.scenario"},
            {"schema_version", kSchemaVersion},
            {"name", s.name},
            {"approaches", approaches},
            {"signal", signal_json(s.signal)},
            {"geometry",
             {{"crosswalk_width", s.geometry.crosswalk_width},
              {"sample_spacing", s.geometry.sample_spacing},
              {"region_margin", s.geometry.region_margin}}},
            {"lane_only", s.lane_only}};
  return j.dump(2);
}

Scenario scenario_from_json(std::string_view text) {
  const auto j = parse(text, "scenario");
  check_schema(j, "cyclesim.scenario");
  return guarded(
      [&] {
        only_keys(j,
                  {"schema", "schema_version", "name", "approaches", "signal", "geometry",
                   "lane_only", "sim"},
                  "scenario");
        Scenario s;
        s.name = j.value("name", std::string("scenario"));
        for (const auto& a : j.at("approaches")) {
          only_keys(a,
                    {"heading", "lane_count", "lane_width", "approach_length", "has_bike_lane",
                     "bike_lane_width"},
                    "approach");
          network::Approach ap;
          ap.heading = heading_of(a.at("heading"));
          ap.lane_count = a.value("lane_count", ap.lane_count);
          ap.lane_width = a.value("lane_width", ap.lane_width);
          ap.approach_length = a.value("approach_length", ap.approach_length);
          ap.has_bike_lane = a.value("has_bike_lane", ap.has_bike_lane);
          ap.bike_lane_width = a.value("bike_lane_width", ap.bike_lane_width);
          s.approaches.push_back(ap);
        }
        s.signal = j.contains("signal") ? signal_from(j.at("signal"))
                                        : network::SignalPlan::two_phase();
        if (j.contains("geometry")) {
          const auto& g = j.at("geometry");
          only_keys(g, {"crosswalk_width", "sample_spacing", "region_margin"}, "geometry");
          s.geometry.crosswalk_width = g.value("crosswalk_width", s.geometry.crosswalk_width);
          s.geometry.sample_spacing = g.value("sample_spacing", s.geometry.sample_spacing);
          s.geometry.region_margin = g.value("region_margin", s.geometry.region_margin);
        }
        s.lane_only = j.value("lane_only", false);
        // Surface geometry errors at load time rather than at first use.
        (void)network::Network::build_four_way(s.approaches, s.signal, s.geometry);
        return s;
      },
      "scenario");
}

SimConfig sim_config_from_json(std::string_view text, SimConfig base) {
  const auto j = parse(text, "scenario");
  return guarded(
      [&] {
        const json* block = &j;
        if (j.contains("schema")) {
          check_schema(j, "cyclesim.scenario");
          if (!j.contains("sim")) return base;
          block = &j.at("sim");
        }
        auto c = sim_from(*block, std::move(base));
        c.validate();
        return c;
      },
      "sim config");
}

std::string sim_config_to_json(const SimConfig& c) { return sim_json(c).dump(2); }

}  // namespace cyclesim::sim
