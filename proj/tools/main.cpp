#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "cyclesim/error.hpp"
#include "pipeline.hpp"

namespace {

using namespace cyclesim;
namespace fs = std::filesystem;

constexpr int kExitValidation = 2;
constexpr int kExitPipeline = 3;

template <class E>
std::map<std::string, E> names(std::initializer_list<E> values) {
  std::map<std::string, E> out;
  for (auto v : values) out.emplace(std::string(to_string(v)), v);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclist simulation pipeline: ingest, analyze, fit, simulate, evaluate"};
  app.require_subcommand(1);
  int exit_code = 0;

  // generate
  pipeline::GenerateOptions gen;
  std::string profile = "realistic";
  auto* g = app.add_subcommand("generate", "Write synthetic ride files with ground-truth sidecars");
  g->add_option("--out", gen.out_dir, "Output directory")->required();
  g->add_option("-n,--count", gen.n, "Number of rides")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--profile", profile, "constant | two_ramp | realistic")->capture_default_str();
  g->add_option("--seed", gen.seed, "Root seed")->capture_default_str();
  g->add_option("--interval", gen.generator.interval_s, "Seconds between fixes")->capture_default_str();
  g->add_option("--noise", gen.generator.gps_noise_m, "GPS noise std dev, m")->capture_default_str();

  // ingest
  pipeline::IngestOptions ing;
  std::string rules_file;
  auto* i = app.add_subcommand("ingest", "Parse, validate, clean and smooth ride files");
  i->add_option("--in", ing.in_dir, "Directory of ride files")->required()->check(CLI::ExistingDirectory);
  i->add_option("--out", ing.out_dir, "Output directory")->required();
  i->add_option("--rules", rules_file, "Validation thresholds (JSON)")->check(CLI::ExistingFile);
  i->add_option("--bandwidth", ing.smooth_bandwidth_s, "Gaussian smoothing bandwidth, s")->capture_default_str();
  i->add_option("--jobs", ing.jobs, "Worker threads")->capture_default_str();

  // analyze
  pipeline::AnalyzeOptions an;
  auto& mc = an.analysis.maneuvers;
  auto* a = app.add_subcommand("analyze", "Extract acceleration maneuvers and per-ride v_max");
  a->add_option("--in", an.in_dir, "Ingest output directory")->required()->check(CLI::ExistingDirectory);
  a->add_option("--out", an.out_dir, "Output directory")->required();
  a->add_option("--alpha", an.analysis.lowpass_alpha, "Low-pass alpha")->capture_default_str();
  a->add_option("--a-min", mc.a_min, "m/s^2")->capture_default_str();
  a->add_option("--t-min", mc.t_min, "s")->capture_default_str();
  a->add_option("--dv-min", mc.dv_min, "m/s")->capture_default_str();
  a->add_option("--merge-gap", mc.merge_gap_s, "s")->capture_default_str();
  a->add_option("--a-artifact", mc.a_artifact, "m/s^2")->capture_default_str();
  a->add_option("--jobs", an.jobs, "Worker threads")->capture_default_str();

  // fit
  pipeline::FitOptions fit;
  const auto families = names({distfit::Family::BurrXII, distfit::Family::JohnsonSU});
  auto* f = app.add_subcommand("fit", "Maximum-likelihood fits of a_max and v_max");
  f->add_option("--in", fit.in_dir, "Analyze output directory")->required()->check(CLI::ExistingDirectory);
  f->add_option("--out", fit.out_file, "fits.json to write")->required();
  std::string accel_family = "burr12", speed_family = "johnson_su";
  f->add_option("--accel-family", accel_family, "burr12 | johnson_su")
      ->check(CLI::IsMember(families))->capture_default_str();
  f->add_option("--speed-family", speed_family, "burr12 | johnson_su")
      ->check(CLI::IsMember(families))->capture_default_str();

  // simulate
  pipeline::SimulateOptions so;
  std::uint64_t seed = 0;
  bool lane_only = false;
  std::string param_source, depart;
  auto* s = app.add_subcommand("simulate", "Run the intersection microsimulation");
  s->add_option("--scenario", so.scenario_file, "Scenario JSON (built-in default when absent)")
      ->check(CLI::ExistingFile);
  s->add_option("--fits", so.fits_file, "fits.json for --param-source fitted")->check(CLI::ExistingFile);
  s->add_option("--out", so.out_dir, "Output directory")->required();
  s->add_option("--seed", seed, "Root seed")->required();
  s->add_option("--step", so.step, "Step length, s");
  s->add_option("--duration", so.duration, "Arrival window, s");
  s->add_option("--cooldown", so.cooldown, "Extra time without arrivals, s");
  s->add_option("--demand", so.demand, "Cyclists per hour per approach");
  s->add_option("--p-indirect", so.p_indirect, "Probability of an indirect left turn")
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--max-arrivals", so.max_arrivals, "Stop generating arrivals after this many");
  s->add_flag("--lane-only", lane_only, "Force indirect turns");
  s->add_option("--param-source", param_source, "scalar | fitted")->check(CLI::IsMember({"scalar", "fitted"}));
  s->add_option("--depart-speed", depart, "zero | max")->check(CLI::IsMember({"zero", "max"}));

  // evaluate
  pipeline::EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Crossing-duration ECDFs, KS comparison and kinematics histograms");
  e->add_option("--log", ev.log_dir, "Simulate output directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--reference", ev.reference_dir, "Second simulate output to compare against")
      ->check(CLI::ExistingDirectory);
  e->add_option("--out", ev.out_dir, "Output directory")->required();
  e->add_option("--accel-bin", ev.accel_bin, "m/s^2")->capture_default_str();
  e->add_option("--speed-bin", ev.speed_bin, "m/s")->capture_default_str();

  // export-trajectories
  std::optional<fs::path> traj_scenario;
  fs::path traj_out;
  auto* x = app.add_subcommand("export-trajectories", "Write synthesized crossing polylines as CSV");
  x->add_option("--scenario", traj_scenario, "Scenario JSON")->check(CLI::ExistingFile);
  x->add_option("--out", traj_out, "CSV file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) {
      const auto p = synth::profile_from_string(profile);
      if (!p) throw Error(ErrorCode::InvalidConfig, "unknown profile " + profile);
      gen.profile = *p;
      const auto ids = pipeline::generate(gen);
      std::printf("generated %zu rides in %s\n", ids.size(), gen.out_dir.string().c_str());
    } else if (*i) {
      if (!rules_file.empty()) ing.rules = ingest::parse_validation_config(pipeline::read_file(rules_file));
      const auto sum = pipeline::run_ingest(ing);
      std::printf("rides: %zu total, %zu used, %zu rejected\n", sum.total, sum.used, sum.total - sum.used);
      for (const auto& file : sum.files) {
        if (file.used) continue;
        std::string why;
        for (const auto& d : file.defects) why += (why.empty() ? "" : ",") + d;
        if (!file.error.empty()) why += (why.empty() ? "" : "; ") + file.error;
        std::printf("  rejected %s: %s\n", file.file.c_str(), why.c_str());
      }
      if (sum.used < sum.total) exit_code = kExitValidation;
    } else if (*a) {
      const auto rides = pipeline::run_analyze(an);
      std::size_t n = 0;
      for (const auto& r : rides) n += r.maneuvers.size();
      std::printf("analyzed %zu rides, %zu maneuvers\n", rides.size(), n);
    } else if (*f) {
      fit.accel_family = families.at(accel_family);
      fit.speed_family = families.at(speed_family);
      const auto fits = pipeline::run_fit(fit);
      std::printf("a_max: n=%zu ks=%.4f converged=%s\nv_max: n=%zu ks=%.4f converged=%s\n",
                  fits.accel.n, fits.accel.ks_statistic, fits.accel.converged ? "yes" : "no",
                  fits.speed.n, fits.speed.ks_statistic, fits.speed.converged ? "yes" : "no");
    } else if (*s) {
      so.seed = seed;
      if (lane_only) so.lane_only = true;
      if (!param_source.empty()) so.param_source = sim::param_source_from_string(param_source);
      if (!depart.empty()) so.depart = depart == "max" ? sim::DepartSpeed::Max : sim::DepartSpeed::Zero;
      const auto log = pipeline::run_simulate(so);
      std::printf("spawned %zu, completed %zu, in network %zu, queued %zu\n", log.spawned,
                  log.completed, log.in_network, log.pending);
    } else if (*e) {
      pipeline::run_evaluate(ev);
      std::printf("wrote report.json, ecdf.csv, hist.csv to %s\n", ev.out_dir.string().c_str());
    } else if (*x) {
      pipeline::export_trajectories(traj_scenario, traj_out);
      std::printf("wrote %s\n", traj_out.string().c_str());
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitPipeline;
  }
  return exit_code;
}
