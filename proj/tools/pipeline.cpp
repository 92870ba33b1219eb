#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cyclesim/error.hpp"
#include "cyclesim/eval.hpp"
#include "cyclesim/network.hpp"

namespace cyclesim::pipeline {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_tag(std::string_view schema) {
  return "#schema=" + std::string(schema) + ",version=" + std::to_string(kArtifactVersion);
}

json parse_json(const std::string& text, const fs::path& source) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, source.string() + ": " + e.what());
  }
}

json read_artifact(const fs::path& p, std::string_view schema) {
  auto j = parse_json(read_file(p), p);
  if (!j.is_object() || j.value("schema", "") != schema) {
    throw Error(ErrorCode::VersionMismatch, p.string() + " is not a " + std::string(schema) + " artifact");
  }
  if (j.value("schema_version", -1) != kArtifactVersion) {
    throw Error(ErrorCode::VersionMismatch,
                p.string() + ": " + std::string(schema) + " version " +
                    (j.contains("schema_version") ? j["schema_version"].dump() : "missing") +
                    ", this build reads version " + std::to_string(kArtifactVersion));
  }
  return j;
}

json artifact(std::string_view schema) {
  return {{"schema", schema}, {"schema_version", kArtifactVersion}};
}

// Data rows of a tagged CSV, header checked, split on commas.
std::vector<std::vector<std::string>> read_tagged_csv(const fs::path& p, std::string_view schema,
                                                      std::string_view header) {
  std::istringstream in(read_file(p));
  std::string line;
  if (!std::getline(in, line) || line != csv_tag(schema)) {
    throw Error(ErrorCode::VersionMismatch, p.string() + ": expected '" + csv_tag(schema) + "'");
  }
  if (!std::getline(in, line) || line != header) {
    throw Error(ErrorCode::MalformedFile, p.string() + ": unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    rows.push_back(std::move(f));
  }
  return rows;
}

double to_double(const std::string& s, const fs::path& p) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::MalformedFile, p.string() + ": bad number '" + s + "'");
  }
  return v;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results are written by
// index, so output order never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string safe_name(std::string_view id) {
  std::string out(id);
  for (auto& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  if (out.empty() || out[0] == '.') out.insert(out.begin(), '_');
  return out;
}

std::vector<fs::path> ride_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name.empty() || name[0] == '.' || e.path().extension() == ".json") continue;
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string family_name(distfit::Family f) { return std::string(distfit::to_string(f)); }

}  // namespace

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + p.string());
}

// --- generate ---------------------------------------------------------------

std::vector<std::string> generate(const GenerateOptions& opt) {
  if (opt.n < 1) throw Error(ErrorCode::InvalidConfig, "generate needs n >= 1");
  std::vector<std::string> ids;
  for (const auto& ride : synth::generate(opt.n, opt.profile, opt.seed, opt.generator)) {
    write_file(opt.out_dir / ride.trace.ride_id, ingest::write_ride(ride.trace));
    write_file(opt.out_dir / (ride.trace.ride_id + ".truth.json"), synth::truth_to_json(ride.truth));
    ids.push_back(ride.trace.ride_id);
  }
  return ids;
}

// --- ingest -----------------------------------------------------------------

IngestSummary run_ingest(const IngestOptions& opt) {
  const auto files = ride_files(opt.in_dir);
  struct Work {
    FileOutcome outcome;
    std::optional<ingest::RideTrace> cleaned;
  };
  std::vector<Work> work(files.size());
  parallel_for(files.size(), opt.jobs, [&](std::size_t i) {
    auto& w = work[i];
    w.outcome.file = files[i].filename().string();
    ingest::RideTrace trace;
    try {
      trace = ingest::parse_ride(read_file(files[i]), files[i].filename().string());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Io) throw;
      w.outcome.defects.push_back(e.code() == ErrorCode::EmptyRide ? "empty_ride" : "malformed");
      w.outcome.error = e.what();
      return;
    }
    w.outcome.ride_id = trace.ride_id;
    const auto report = ingest::validate_trace(trace, opt.rules);
    for (auto d : report.defects) w.outcome.defects.emplace_back(ingest::to_string(d));
    w.outcome.used = report.accepted;
    if (report.accepted) w.cleaned = ingest::clean_trace(trace);
  });

  std::set<std::string> seen;
  IngestSummary summary;
  summary.total = files.size();
  for (auto& w : work) {
    if (w.outcome.used && !seen.insert(safe_name(w.outcome.ride_id)).second) {
      w.outcome.used = false;
      w.outcome.error = "duplicate ride id " + w.outcome.ride_id;
      w.cleaned.reset();
    }
  }
  parallel_for(work.size(), opt.jobs, [&](std::size_t i) {
    const auto& w = work[i];
    if (!w.cleaned) return;
    const auto name = safe_name(w.cleaned->ride_id) + ".csv";
    write_file(opt.out_dir / "cleaned" / name, ingest::write_ride(*w.cleaned));
    auto smoothed = *w.cleaned;
    smoothed.points = ingest::gaussian_kernel_smooth(w.cleaned->points, opt.smooth_bandwidth_s);
    write_file(opt.out_dir / "smoothed" / name, ingest::write_ride(smoothed));
  });

  std::map<std::string, std::size_t> defect_counts;
  json files_json = json::array();
  for (auto& w : work) {
    if (w.outcome.used) ++summary.used;
    for (const auto& d : w.outcome.defects) ++defect_counts[d];
    files_json.push_back({{"file", w.outcome.file},
                          {"ride_id", w.outcome.ride_id},
                          {"used", w.outcome.used},
                          {"defects", w.outcome.defects},
                          {"error", w.outcome.error}});
    summary.files.push_back(std::move(w.outcome));
  }
  auto j = artifact("cyclesim.ingest");
  j["metadata"] = {{"input", opt.in_dir.string()},
                   {"rules", json::parse(ingest::to_json(opt.rules))},
                   {"smooth_bandwidth_s", opt.smooth_bandwidth_s}};
  j["total"] = summary.total;
  j["used"] = summary.used;
  j["rejected"] = summary.total - summary.used;
  j["defect_counts"] = defect_counts;
  j["files"] = std::move(files_json);
  write_file(opt.out_dir / "ingest_summary.json", j.dump(2) + "\n");
  return summary;
}

// --- analyze ----------------------------------------------------------------

std::vector<kinematics::RideKinematics> run_analyze(const AnalyzeOptions& opt) {
  const auto summary = read_artifact(opt.in_dir / "ingest_summary.json", "cyclesim.ingest");
  std::vector<std::string> ids;
  for (const auto& f : summary.at("files")) {
    if (f.at("used").get<bool>()) ids.push_back(f.at("ride_id").get<std::string>());
  }
  std::vector<kinematics::RideKinematics> rides(ids.size());
  parallel_for(ids.size(), opt.jobs, [&](std::size_t i) {
    const auto path = opt.in_dir / "cleaned" / (safe_name(ids[i]) + ".csv");
    rides[i] = kinematics::analyze_ride(ingest::parse_ride(read_file(path), ids[i]), opt.analysis);
  });

  const auto& m = opt.analysis.maneuvers;
  auto j = artifact("cyclesim.kinematics");
  j["metadata"] = {{"input", opt.in_dir.string()},
                   {"lowpass_alpha", opt.analysis.lowpass_alpha},
                   {"maneuvers",
                    {{"a_min", m.a_min},
                     {"t_min", m.t_min},
                     {"dv_min", m.dv_min},
                     {"merge_gap_s", m.merge_gap_s},
                     {"a_artifact", m.a_artifact},
                     {"episode_floor", m.episode_floor}}}};
  json list = json::array();
  std::ostringstream man, vmax;
  man << csv_tag("cyclesim.maneuvers") << "\nride_id,start_ms,end_ms,v_start,v_end,a_max\n";
  vmax << csv_tag("cyclesim.vmax") << "\nride_id,v_max\n";
  for (const auto& r : rides) {
    json ms = json::array();
    for (const auto& x : r.maneuvers) {
      ms.push_back({{"start_ms", x.start_ms},
                    {"end_ms", x.end_ms},
                    {"v_start", x.v_start},
                    {"v_end", x.v_end},
                    {"a_max", x.a_max}});
      man << r.ride_id << ',' << x.start_ms << ',' << x.end_ms << ',' << num(x.v_start) << ','
          << num(x.v_end) << ',' << num(x.a_max) << '\n';
    }
    list.push_back({{"ride_id", r.ride_id}, {"v_max", r.v_max}, {"maneuvers", ms}});
    vmax << r.ride_id << ',' << num(r.v_max) << '\n';
  }
  j["rides"] = std::move(list);
  write_file(opt.out_dir / "kinematics.json", j.dump(2) + "\n");
  write_file(opt.out_dir / "maneuvers.csv", man.str());
  write_file(opt.out_dir / "vmax.csv", vmax.str());
  return rides;
}

// --- fit --------------------------------------------------------------------

Fits run_fit(const FitOptions& opt) {
  std::vector<double> accel, speed;
  const auto man_path = opt.in_dir / "maneuvers.csv";
  for (const auto& row : read_tagged_csv(man_path, "cyclesim.maneuvers",
                                         "ride_id,start_ms,end_ms,v_start,v_end,a_max")) {
    if (row.size() != 6) throw Error(ErrorCode::MalformedFile, man_path.string() + ": bad row");
    accel.push_back(to_double(row[5], man_path));
  }
  const auto vmax_path = opt.in_dir / "vmax.csv";
  for (const auto& row : read_tagged_csv(vmax_path, "cyclesim.vmax", "ride_id,v_max")) {
    if (row.size() != 2) throw Error(ErrorCode::MalformedFile, vmax_path.string() + ": bad row");
    speed.push_back(to_double(row[1], vmax_path));
  }
  Fits fits{distfit::fit_mle(accel, opt.accel_family), distfit::fit_mle(speed, opt.speed_family)};

  auto j = artifact("cyclesim.fits");
  j["metadata"] = {{"input", opt.in_dir.string()},
                   {"accel_family", family_name(opt.accel_family)},
                   {"speed_family", family_name(opt.speed_family)}};
  j["accel"] = json::parse(distfit::to_json(fits.accel));
  j["speed"] = json::parse(distfit::to_json(fits.speed));
  write_file(opt.out_file, j.dump(2) + "\n");
  return fits;
}

Fits read_fits(const fs::path& file) {
  const auto j = read_artifact(file, "cyclesim.fits");
  try {
    return Fits{distfit::fit_result_from_json(j.at("accel").dump()),
                distfit::fit_result_from_json(j.at("speed").dump())};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, file.string() + ": " + e.what());
  }
}

// --- simulate ---------------------------------------------------------------

std::pair<sim::Scenario, sim::SimConfig> resolve_simulation(const SimulateOptions& opt) {
  sim::Scenario scenario = sim::Scenario::default_four_way();
  sim::SimConfig cfg;
  if (opt.scenario_file) {
    const auto text = read_file(*opt.scenario_file);
    scenario = sim::scenario_from_json(text);
    cfg = sim::sim_config_from_json(text, cfg);
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.step) cfg.step = *opt.step;
  if (opt.duration) cfg.duration = *opt.duration;
  if (opt.cooldown) cfg.cooldown = *opt.cooldown;
  if (opt.demand) cfg.demand = *opt.demand;
  if (opt.p_indirect) cfg.p_indirect = *opt.p_indirect;
  if (opt.lane_only) cfg.lane_only = *opt.lane_only;
  if (opt.max_arrivals) cfg.max_arrivals = *opt.max_arrivals;
  if (opt.param_source) cfg.params.source = *opt.param_source;
  if (opt.depart) cfg.depart = *opt.depart;
  if (opt.fits_file) {
    const auto fits = read_fits(*opt.fits_file);
    cfg.params.accel = fits.accel.dist;
    cfg.params.speed = fits.speed.dist;
  }
  cfg.validate();
  return {std::move(scenario), std::move(cfg)};
}

sim::TrajectoryLog run_simulate(const SimulateOptions& opt) {
  const auto [scenario, cfg] = resolve_simulation(opt);
  auto log = sim::run(scenario, cfg);
  json meta = {{"scenario", json::parse(sim::scenario_to_json(scenario))},
               {"sim", json::parse(sim::sim_config_to_json(cfg))},
               {"lane_only_effective", cfg.lane_only.value_or(scenario.lane_only)},
               {"timing_region", "conflict area grown by region_margin"},
               {"fits_file", opt.fits_file ? json(opt.fits_file->string()) : json(nullptr)}};
  std::ostringstream steps;
  sim::write_records_csv(steps, log.records);
  write_file(opt.out_dir / "steps.csv", steps.str());
  write_file(opt.out_dir / "summary.json", sim::summaries_to_json(log, meta.dump()) + "\n");
  return log;
}

// --- evaluate ---------------------------------------------------------------

sim::TrajectoryLog read_log(const fs::path& dir, bool with_records) {
  auto log = sim::summaries_from_json(read_file(dir / "summary.json"));
  if (with_records) {
    std::istringstream in(read_file(dir / "steps.csv"));
    log.records = sim::read_records_csv(in);
  }
  return log;
}

void run_evaluate(const EvaluateOptions& opt) {
  const auto log = read_log(opt.log_dir);
  const auto all = eval::crossing_durations(log);
  const auto direct = eval::crossing_durations(log, sim::TurnKind::Direct);
  const auto indirect = eval::crossing_durations(log, sim::TurnKind::Indirect);

  std::vector<double> a, b;
  std::string a_label, b_label;
  std::vector<double> reference;
  if (opt.reference_dir) {
    reference = eval::crossing_durations(read_log(*opt.reference_dir, false));
    a = all;
    b = reference;
    a_label = opt.log_dir.string();
    b_label = opt.reference_dir->string();
  } else {
    a = direct;
    b = indirect;
    a_label = "direct";
    b_label = "indirect";
  }
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::EmptyList, "no completed crossings for '" + (a.empty() ? a_label : b_label) +
                                          "'; pass --reference to compare two runs");
  }
  auto report = json::parse(eval::to_json(eval::compare(a, b)));
  report["a"] = a_label;
  report["b"] = b_label;
  report["metadata"] = {{"log", opt.log_dir.string()},
                        {"reference", opt.reference_dir ? json(opt.reference_dir->string()) : json(nullptr)},
                        {"duration_definition", "exit_s - entry_s of completed left turns"},
                        {"accel_bin", opt.accel_bin},
                        {"speed_bin", opt.speed_bin}};
  write_file(opt.out_dir / "report.json", report.dump(2) + "\n");

  std::vector<std::pair<std::string, eval::Ecdf>> series;
  auto add = [&](const char* name, const std::vector<double>& v) {
    if (!v.empty()) series.emplace_back(name, eval::ecdf(v));
  };
  add("all", all);
  add("direct", direct);
  add("indirect", indirect);
  add("reference", reference);
  write_file(opt.out_dir / "ecdf.csv", eval::ecdf_csv(series));
  write_file(opt.out_dir / "hist.csv",
             eval::hist_csv(eval::observed_kinematics_histogram(log.records, opt.accel_bin, opt.speed_bin)));
}

// --- export-trajectories ----------------------------------------------------

void export_trajectories(const std::optional<fs::path>& scenario_file, const fs::path& out_file) {
  const auto scenario = scenario_file ? sim::scenario_from_json(read_file(*scenario_file))
                                      : sim::Scenario::default_four_way();
  const auto net = network::Network::build_four_way(scenario.approaches, scenario.signal, scenario.geometry);
  std::ostringstream out;
  out << "from,kind,index,x,y,mark\n";
  for (auto h : {sim::Heading::N, sim::Heading::E, sim::Heading::S, sim::Heading::W}) {
    for (const auto& t : {network::synthesize_direct_turn(net, h), network::synthesize_indirect_turn(net, h),
                          network::synthesize_through(net, h)}) {
      for (std::size_t i = 0; i < t.polyline.size(); ++i) {
        const char* mark = i == t.stop_line_index ? "stop_line"
                           : (t.waiting_node_index && i == *t.waiting_node_index) ? "waiting_node"
                                                                                   : "";
        out << network::to_string(h) << ',' << network::to_string(t.kind) << ',' << i << ','
            << num(t.polyline[i].x) << ',' << num(t.polyline[i].y) << ',' << mark << '\n';
      }
    }
  }
  write_file(out_file, out.str());
}

}  // namespace cyclesim::pipeline
