// Acceptance runner: one PASS / FAIL / SKIP line per criterion, exit status
// non-zero when anything fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <json.hpp>

#include "cyclesim/distfit.hpp"
#include "cyclesim/eval.hpp"
#include "cyclesim/kinematics.hpp"
#include "cyclesim/simcore.hpp"
#include "pipeline.hpp"
#include "sim_checks.hpp"

namespace {

using namespace cyclesim;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

const fs::path kData = CYCLESIM_DATA_DIR;

pipeline::Fits default_fits() { return pipeline::read_fits(kData / "default_fits.json"); }

fs::path scratch(const std::string& name) {
  std::random_device rd;
  auto p = fs::temp_directory_path() / ("cyclesim-acceptance-" + name + "-" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

// 1 -------------------------------------------------------------------------
Outcome distribution_identities() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double probes[] = {1e-6, 1e-4, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1 - 1e-4, 1 - 1e-6};
  boost::math::quadrature::exp_sinh<double> half_line;
  boost::math::quadrature::sinh_sinh<double> full_line;
  double worst_mass = 0.0, worst_inv = 0.0;
  for (int i = 0; i < 20; ++i) {
    const distfit::BurrXII b({1.0 + 5.0 * u(rng), 0.5 + 3.5 * u(rng), 0.2 + 4.8 * u(rng)});
    const distfit::JohnsonSU j({-3.0 + 6.0 * u(rng), 0.5 + 3.5 * u(rng), -10.0 + 20.0 * u(rng), 0.2 + 4.8 * u(rng)});
    const double mb = half_line.integrate([&](double x) { return b.pdf(x); }, 0.0,
                                          std::numeric_limits<double>::infinity());
    const double mj = full_line.integrate([&](double x) { return j.pdf(x); });
    worst_mass = std::max({worst_mass, std::abs(mb - 1.0), std::abs(mj - 1.0)});
    for (double p : probes) {
      worst_inv = std::max({worst_inv, std::abs(b.cdf(b.quantile(p)) - p), std::abs(j.cdf(j.quantile(p)) - p)});
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst_mass <= 1e-6 && worst_inv <= 1e-10 && secs < 5.0,
                 fmt("max |mass-1| %.2e, max |cdf(q(p))-p| %.2e, %.2f s", worst_mass, worst_inv, secs));
}

// 2 -------------------------------------------------------------------------
Outcome fit_recovery() {
  const auto t0 = Clock::now();
  Rng rb(101), rj(202);
  const auto xb = distfit::sample(distfit::BurrXII({3, 2, 1.5}), rb, 50'000);
  const auto xj = distfit::sample(distfit::JohnsonSU({-1, 2, 6, 2}), rj, 50'000);
  const auto fb = distfit::fit_mle(xb, distfit::Family::BurrXII);
  const auto fj = distfit::fit_mle(xj, distfit::Family::JohnsonSU);
  const double secs = seconds_since(t0);
  const auto& pb = std::get<distfit::BurrXII>(fb.dist).params();
  const auto& pj = std::get<distfit::JohnsonSU>(fj.dist).params();
  auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
  const double worst = std::max({rel(pb.c, 3), rel(pb.k, 2), rel(pb.scale, 1.5), rel(pj.gamma, -1),
                                 rel(pj.delta, 2), rel(pj.xi, 6), rel(pj.lambda, 2)});
  const bool ok = worst <= 0.05 && std::abs(pj.xi - 6.0) <= 0.15 && fb.converged && fj.converged && secs < 30.0;
  // Separates optimizer trouble (fit below truth) from sampling noise.
  const distfit::JohnsonSU truth({-1, 2, 6, 2});
  double ll_true = 0.0;
  for (double x : xj) ll_true += truth.log_pdf(x);
  return verdict(ok, fmt("Burr(%.3f, %.3f, %.3f) JSU(%.3f, %.3f, %.3f, %.3f), worst rel err %.3f, converged %d/%d, "
                         "JSU loglik fit - truth %+.2f, %.2f s",
                         pb.c, pb.k, pb.scale, pj.gamma, pj.delta, pj.xi, pj.lambda, worst, fb.converged,
                         fj.converged, fj.log_likelihood - ll_true, secs));
}

// 3 -------------------------------------------------------------------------
Outcome sampling_fidelity() {
  const distfit::Distribution b = distfit::BurrXII({3, 2, 1.5});
  const distfit::Distribution j = distfit::JohnsonSU({-1, 2, 6, 2});
  Rng rb(303), rj(404);
  const double kb = distfit::ks_statistic(distfit::sample(b, rb, 100'000), b);
  const double kj = distfit::ks_statistic(distfit::sample(j, rj, 100'000), j);
  return verdict(kb < 0.01 && kj < 0.01, fmt("KS Burr %.4f, JSU %.4f", kb, kj));
}

// 4 -------------------------------------------------------------------------
Outcome independence() {
  const auto fits = default_fits();
  sim::ParamModel model;
  model.source = sim::ParamSource::Fitted;
  model.accel = fits.accel.dist;
  model.speed = fits.speed.dist;
  Rng rng = Rng::stream(1, "params");
  std::vector<double> a, v;
  for (int i = 0; i < 10'000; ++i) {
    const auto p = sim::sample_cyclist_params(model, rng);
    a.push_back(p.a_max);
    v.push_back(p.v_max);
  }
  const double r = kinematics::correlation(a, v);
  return verdict(std::abs(r) < 0.05, fmt("r(a_max, v_max) = %+.4f over 10000 draws from the default fits", r));
}

// 5 -------------------------------------------------------------------------
// N-S green for the whole run, arrivals from N and S only, no indirect turns:
// nobody meets a red light, so only other cyclists can obstruct.
Outcome scalar_clustering() {
  auto sc = sim::Scenario::default_four_way();
  sc.signal.phases = {{network::Axis::NS, 1e6, 0.0}};
  sim::SimConfig cfg;
  cfg.seed = 5;
  cfg.active = {network::Heading::N, network::Heading::S};
  cfg.demand = 400.0;
  cfg.p_indirect = 0.0;
  cfg.through_fraction = 0.5;
  cfg.max_arrivals = 500;
  cfg.duration = 3600.0;
  cfg.cooldown = 300.0;
  sim::Simulation simulation(sc, cfg);
  simulation.run_to_end();
  const auto& log = simulation.log();
  const auto maxima = eval::observed_maxima(log.records);
  std::size_t free = 0, clustered = 0;
  double worst_step_accel = 0.0;
  for (const auto& m : maxima) {
    const auto& c = log.cyclists[m.id];
    worst_step_accel = std::max(worst_step_accel, m.max_accel);
    if (c.obstructed || !c.completed) continue;
    ++free;
    clustered += std::abs(m.max_speed - 5.56) <= 1e-9;
  }
  const bool ok = log.spawned == 500 && free > 0 && clustered == free && worst_step_accel <= 1.2 + 1e-9;
  return verdict(ok, fmt("%zu spawned, %zu unobstructed, %zu of them at 5.56 m/s, max step accel %.12f",
                         log.spawned, free, clustered, worst_step_accel));
}

// 6 -------------------------------------------------------------------------
Outcome turn_choice() {
  auto fraction = [](double p, bool lane_only) {
    Rng rng = Rng::stream(6, "turn");
    std::size_t n = 0;
    for (int i = 0; i < 10'000; ++i) n += sim::choose_turn(rng, p, lane_only) == network::TurnKind::Indirect;
    return n / 10'000.0;
  };
  const double f57 = fraction(0.57, false), f0 = fraction(0.0, false), lane = fraction(0.57, true);
  // The same rule as seen through a simulation's own turn stream.
  sim::SimConfig cfg;
  cfg.seed = 6;
  cfg.duration = 7200;
  cfg.p_indirect = 0.57;
  const auto log = sim::run(sim::Scenario::default_four_way(), cfg);
  std::size_t ind = 0;
  for (const auto& c : log.cyclists) ind += c.kind == network::TurnKind::Indirect;
  const double f_sim = static_cast<double>(ind) / log.cyclists.size();
  const bool ok = f57 >= 0.55 && f57 <= 0.59 && f0 == 0.0 && lane == 1.0;
  return verdict(ok, fmt("p=0.57 -> %.4f, p=0 -> %.4f, lane_only -> %.4f (in a 2 h run: %.3f of %zu)", f57, f0,
                         lane, f_sim, log.cyclists.size()));
}

// 7 -------------------------------------------------------------------------
Outcome indirect_delay() {
  const auto scenario = sim::Scenario::default_four_way();
  const auto& plan = scenario.signal;
  sim::SimConfig base;
  base.seed = 7;
  base.duration = 7200;
  base.cooldown = 300;
  auto durations = [&](double p, std::optional<bool> lane_only) {
    auto cfg = base;
    cfg.p_indirect = p;
    cfg.lane_only = lane_only;
    return sim::run(scenario, cfg);
  };
  const auto mixed = durations(0.57, std::nullopt);
  const auto direct = eval::crossing_durations(mixed, network::TurnKind::Direct);
  const auto indirect = eval::crossing_durations(mixed, network::TurnKind::Indirect);
  const auto r = eval::compare(direct, indirect);
  // A cyclist reaching the node at a uniform time within its own green
  // (amber included) waits out the rest of it plus the all-red.
  const double own_green = plan.phases[0].duration;
  const double expected_wait = own_green / 2.0 + plan.phases[0].all_red;
  const double need = expected_wait - 2.0 * base.step;
  const bool gap_ok = r.mean_b - r.mean_a >= need;

  const auto all_mixed = eval::ecdf(eval::crossing_durations(mixed));
  const auto all_direct = eval::ecdf(eval::crossing_durations(durations(0.0, false)));
  const auto all_indirect = eval::ecdf(eval::crossing_durations(durations(0.57, true)));
  std::size_t between = 0;
  for (double q : eval::kDeciles) {
    const double m = all_mixed.quantile(q);
    between += all_direct.quantile(q) <= m && m <= all_indirect.quantile(q);
  }
  const bool ok = gap_ok && between == std::size(eval::kDeciles);
  return verdict(ok, fmt("mean indirect %.2f s - direct %.2f s = %.2f s (need >= %.2f); mixed ECDF between at %zu/9 deciles",
                         r.mean_b, r.mean_a, r.mean_b - r.mean_a, need, between));
}

// 8 -------------------------------------------------------------------------
Outcome safety_invariants() {
  const auto t0 = Clock::now();
  const auto fits = default_fits();
  sim::SimConfig cfg;
  cfg.seed = 8;
  cfg.duration = 7200;
  cfg.demand = 60;
  cfg.max_arrivals = 400;
  cfg.params.source = sim::ParamSource::Fitted;
  cfg.params.accel = fits.accel.dist;
  cfg.params.speed = fits.speed.dist;
  auto once = [&](checks::InvariantReport* rep, sim::TrajectoryLog* out) {
    sim::Simulation s(sim::Scenario::default_four_way(), cfg);
    s.run_to_end();
    if (rep) *rep = checks::check_invariants(s, cfg);
    std::ostringstream bytes;
    sim::write_records_csv(bytes, s.log().records);
    bytes << sim::summaries_to_json(s.log());
    if (out) *out = s.take_log();
    return bytes.str();
  };
  checks::InvariantReport rep;
  sim::TrajectoryLog log;
  const auto a = once(&rep, &log);
  const auto b = once(nullptr, nullptr);
  const double secs = seconds_since(t0);
  const bool conserved = log.spawned == log.completed + log.in_network && log.spawned + log.pending == 400;
  const bool ok = rep.gap_violations == 0 && rep.red_crossings == 0 && conserved && a == b && secs < 60.0 &&
                  checks::clean(rep);
  return verdict(ok, fmt("%zu spawned = %zu completed + %zu in network; gap violations %zu (min margin %.3f m), "
                         "red crossings %zu, identical logs %s (%zu bytes), %.2f s",
                         log.spawned, log.completed, log.in_network, rep.gap_violations, rep.min_gap_margin,
                         rep.red_crossings, a == b ? "yes" : "no", a.size(), secs) +
                         (rep.first_problem.empty() ? "" : "; " + rep.first_problem));
}

// 9 -------------------------------------------------------------------------
Outcome maneuver_oracle() {
  const auto dir = scratch("maneuvers");
  std::size_t files = 0, matched = 0, constant_zero = 0, constant_files = 0;
  for (auto profile : {synth::Profile::TwoRamp, synth::Profile::Constant}) {
    const std::string name(synth::to_string(profile));
    pipeline::GenerateOptions g;
    g.n = 100;
    g.profile = profile;
    g.seed = 9;
    g.out_dir = dir / (name + "_rides");
    pipeline::generate(g);
    pipeline::IngestOptions i;
    i.in_dir = g.out_dir;
    i.out_dir = dir / (name + "_ingest");
    pipeline::run_ingest(i);
    pipeline::AnalyzeOptions a;
    a.in_dir = i.out_dir;
    a.out_dir = dir / (name + "_analyze");
    for (const auto& r : pipeline::run_analyze(a)) {
      const auto truth = synth::truth_from_json(pipeline::read_file(g.out_dir / (r.ride_id + ".truth.json")));
      if (profile == synth::Profile::TwoRamp) {
        ++files;
        matched += r.maneuvers.size() == truth.maneuvers.size();
      } else {
        ++constant_files;
        constant_zero += r.maneuvers.empty();
      }
    }
  }
  fs::remove_all(dir);
  const bool ok = files == 100 && matched == files && constant_files == 100 && constant_zero == constant_files;
  return verdict(ok, fmt("two-ramp: %zu/%zu counts match truth; constant: %zu/%zu with zero maneuvers", matched,
                         files, constant_zero, constant_files));
}

// 10 ------------------------------------------------------------------------
Outcome dataset_check() {
  const char* env = std::getenv("CYCLESIM_SIMRA_DIR");
  if (!env || !fs::is_directory(env)) {
    return {Verdict::Skip, "no ride files (set CYCLESIM_SIMRA_DIR to a directory of SimRa ride files)"};
  }
  const auto dir = scratch("simra");
  try {
    pipeline::IngestOptions i;
    i.in_dir = env;
    i.out_dir = dir / "ingest";
    i.jobs = 4;
    const auto s = pipeline::run_ingest(i);
    std::size_t parsed = 0;
    for (const auto& f : s.files) parsed += f.error.empty();
    const double rate = s.total ? static_cast<double>(parsed) / s.total : 0.0;
    pipeline::AnalyzeOptions a;
    a.in_dir = i.out_dir;
    a.out_dir = dir / "analyze";
    pipeline::run_analyze(a);
    pipeline::FitOptions f;
    f.in_dir = a.out_dir;
    f.out_file = dir / "fits.json";
    pipeline::run_fit(f);
    pipeline::SimulateOptions so;
    so.seed = 10;
    so.duration = 3600;
    so.fits_file = f.out_file;
    so.param_source = sim::ParamSource::Fitted;
    so.out_dir = dir / "sim";
    pipeline::run_simulate(so);
    pipeline::EvaluateOptions e;
    e.log_dir = so.out_dir;
    e.out_dir = dir / "eval";
    pipeline::run_evaluate(e);
    fs::remove_all(dir);
    return verdict(rate >= 0.95, fmt("%zu files, %.1f%% parsed, %zu used; full pipeline completed", s.total,
                                     100.0 * rate, s.used));
  } catch (const std::exception& ex) {
    fs::remove_all(dir);
    return {Verdict::Fail, std::string("pipeline error: ") + ex.what()};
  }
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"distribution identities", distribution_identities},
      {"fit recovery", fit_recovery},
      {"sampling fidelity", sampling_fidelity},
      {"parameter independence", independence},
      {"scalar-default clustering", scalar_clustering},
      {"turn-choice convergence", turn_choice},
      {"indirect-delay ordering", indirect_delay},
      {"safety and consistency invariants", safety_invariants},
      {"maneuver extraction oracle", maneuver_oracle},
      {"optional dataset check", dataset_check},
  };
  int failures = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Skip ? "SKIP" : "FAIL";
    failures += o.verdict == Verdict::Fail;
    std::printf("%s %2d %s: %s\n", tag, n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
