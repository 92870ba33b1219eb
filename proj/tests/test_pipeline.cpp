#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <sys/wait.h>

#include <json.hpp>

#include "cyclesim/distfit.hpp"
#include "cyclesim/error.hpp"
#include "cyclesim/eval.hpp"
#include "cyclesim/kinematics.hpp"
#include "pipeline.hpp"

using namespace cyclesim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("cyclesim-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

int cli(const std::string& args) {
  const std::string cmd = std::string(CYCLESIM_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json load(const fs::path& p) { return json::parse(pipeline::read_file(p)); }

const fs::path kData = CYCLESIM_DATA_DIR;
const fs::path kFixtures = CYCLESIM_FIXTURE_DIR;

}  // namespace

TEST(Ingest, BundledCorpusAllAccepted) {
  TempDir out;
  pipeline::IngestOptions opt;
  opt.in_dir = kData / "synthetic_corpus";
  opt.out_dir = out.path();
  const auto s = pipeline::run_ingest(opt);
  EXPECT_EQ(s.total, 60u);
  EXPECT_EQ(s.used, 60u);
  const auto j = load(out / "ingest_summary.json");
  EXPECT_EQ(j.at("used"), 60);
  EXPECT_EQ(j.at("rejected"), 0);
  EXPECT_TRUE(fs::exists(out / "cleaned"));
  EXPECT_EQ(std::distance(fs::directory_iterator(out / "smoothed"), fs::directory_iterator{}), 60);
}

TEST(Ingest, CorruptedFilesAreItemized) {
  TempDir in, out;
  for (const auto& e : fs::directory_iterator(kData / "synthetic_corpus")) {
    fs::copy_file(e.path(), in / e.path().filename().string());
  }
  pipeline::write_file(in / "broken_no_separator", "lat,lon,timeStamp\n1,2,3\n");
  // A 2 km jump between fixes.
  auto t = synth::generate(1, synth::Profile::Constant, 5)[0].trace;
  t.ride_id = "teleport";
  for (std::size_t i = t.points.size() / 2; i < t.points.size(); ++i) t.points[i].lat += 0.018;
  pipeline::write_file(in / "teleport", ingest::write_ride(t));

  pipeline::IngestOptions opt;
  opt.in_dir = in.path();
  opt.out_dir = out.path();
  opt.jobs = 3;
  const auto s = pipeline::run_ingest(opt);
  EXPECT_EQ(s.total, 62u);
  EXPECT_EQ(s.used, s.total - 2);
  const auto j = load(out / "ingest_summary.json");
  EXPECT_EQ(j.at("defect_counts").at("malformed"), 1);
  EXPECT_EQ(j.at("defect_counts").at("teleport_jump"), 1);

  EXPECT_EQ(cli("ingest --in " + in.path().string() + " --out " + (out / "cli").string()), 2);
  EXPECT_EQ(cli("ingest --in " + (kData / "synthetic_corpus").string() + " --out " + (out / "ok").string()), 0);
}

TEST(Ingest, SimRaLayoutFilesParseAndValidate) {
  for (const auto& e : fs::directory_iterator(kFixtures / "simra_layout")) {
    const auto t = ingest::parse_ride(pipeline::read_file(e.path()), e.path().filename().string());
    EXPECT_EQ(t.ride_id, e.path().filename().string());
    EXPECT_GE(t.points.size(), 150u);
    const auto rep = ingest::validate_trace(t);
    EXPECT_TRUE(rep.accepted) << e.path();
    const auto k = kinematics::analyze_ride(ingest::clean_trace(t));
    EXPECT_GT(k.v_max, 3.0);
    EXPECT_FALSE(k.maneuvers.empty());
  }
}

TEST(Pipeline, EndToEndOnTheBundledCorpus) {
  TempDir w;
  const auto start = std::chrono::steady_clock::now();
  const std::string corpus = (kData / "synthetic_corpus").string();
  ASSERT_EQ(cli("ingest --in " + corpus + " --out " + (w / "ing").string()), 0);
  ASSERT_EQ(cli("analyze --in " + (w / "ing").string() + " --out " + (w / "an").string()), 0);
  ASSERT_EQ(cli("fit --in " + (w / "an").string() + " --out " + (w / "fits.json").string()), 0);
  ASSERT_EQ(cli("simulate --seed 3 --duration 1800 --param-source fitted --fits " + (w / "fits.json").string() +
                " --out " + (w / "sim").string()),
            0);
  ASSERT_EQ(cli("simulate --seed 3 --duration 1800 --param-source scalar --out " + (w / "ref").string()), 0);
  ASSERT_EQ(cli("evaluate --log " + (w / "sim").string() + " --reference " + (w / "ref").string() +
                " --out " + (w / "ev").string()),
            0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 60.0);

  const auto fits = pipeline::read_fits(w / "fits.json");
  EXPECT_EQ(distfit::family_of(fits.accel.dist), distfit::Family::BurrXII);
  EXPECT_EQ(distfit::family_of(fits.speed.dist), distfit::Family::JohnsonSU);
  const auto report = load(w / "ev" / "report.json");
  EXPECT_EQ(report.at("schema"), "cyclesim.report");
  const auto summary = load(w / "sim" / "summary.json");
  // Every effective setting is echoed into the output.
  EXPECT_EQ(summary.at("metadata").at("sim").at("seed"), 3);
  EXPECT_EQ(summary.at("metadata").at("sim").at("param_source"), "fitted");
  EXPECT_TRUE(fs::exists(w / "ev" / "ecdf.csv"));
  EXPECT_TRUE(fs::exists(w / "ev" / "hist.csv"));
}

TEST(Pipeline, StagesAreIdempotent) {
  TempDir w;
  for (const char* run : {"a", "b"}) {
    pipeline::GenerateOptions g;
    g.n = 4;
    g.profile = synth::Profile::TwoRamp;
    g.seed = 9;
    g.out_dir = w / (std::string(run) + "_rides");
    pipeline::generate(g);
    pipeline::IngestOptions i;
    i.in_dir = g.out_dir;
    i.out_dir = w / (std::string(run) + "_ing");
    pipeline::run_ingest(i);
    pipeline::AnalyzeOptions a;
    a.in_dir = i.out_dir;
    a.out_dir = w / (std::string(run) + "_an");
    pipeline::run_analyze(a);
  }
  for (const char* f : {"two_ramp-0001", "two_ramp-0004", "two_ramp-0002.truth.json"}) {
    EXPECT_EQ(pipeline::read_file(w / "a_rides" / f), pipeline::read_file(w / "b_rides" / f));
  }
  EXPECT_EQ(pipeline::read_file(w / "a_ing" / "smoothed" / "two_ramp-0003.csv"),
            pipeline::read_file(w / "b_ing" / "smoothed" / "two_ramp-0003.csv"));
  EXPECT_EQ(pipeline::read_file(w / "a_an" / "maneuvers.csv"), pipeline::read_file(w / "b_an" / "maneuvers.csv"));

  for (const char* tag : {"x", "y"}) {
    pipeline::SimulateOptions s;
    s.seed = 12;
    s.duration = 900;
    s.out_dir = w / (std::string("sim_") + tag);
    pipeline::run_simulate(s);
  }
  EXPECT_EQ(pipeline::read_file(w / "sim_x" / "steps.csv"), pipeline::read_file(w / "sim_y" / "steps.csv"));
  EXPECT_EQ(pipeline::read_file(w / "sim_x" / "summary.json"), pipeline::read_file(w / "sim_y" / "summary.json"));
}

TEST(Pipeline, VersionMismatchIsExplicit) {
  TempDir w;
  fs::create_directories(w / "ing");
  pipeline::write_file(w / "ing" / "ingest_summary.json", R"({"schema":"cyclesim.ingest","schema_version":99})");
  pipeline::AnalyzeOptions a;
  a.in_dir = w / "ing";
  a.out_dir = w / "an";
  try {
    pipeline::run_analyze(a);
    ADD_FAILURE() << "accepted a future artifact";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VersionMismatch);
  }
  pipeline::write_file(w / "fits.json", R"({"schema":"cyclesim.kinematics","schema_version":1})");
  EXPECT_THROW(pipeline::read_fits(w / "fits.json"), Error);
  EXPECT_EQ(cli("analyze --in " + (w / "ing").string() + " --out " + (w / "an").string()), 3);
}

TEST(Cli, ArgumentRules) {
  TempDir w;
  // The seed is mandatory for simulate.
  EXPECT_NE(cli("simulate --out " + (w / "s").string()), 0);
  EXPECT_NE(cli("simulate --seed 1 --p-indirect 1.5 --out " + (w / "s").string()), 0);
  EXPECT_NE(cli("fit --in " + w.path().string() + " --out x.json --accel-family gamma"), 0);
  EXPECT_EQ(cli("simulate --seed 1 --param-source fitted --out " + (w / "s").string()), 3);
  EXPECT_EQ(cli("generate --out " + (w / "g").string() + " -n 3 --profile constant --seed 2"), 0);
  EXPECT_EQ(std::distance(fs::directory_iterator(w / "g"), fs::directory_iterator{}), 6);
  EXPECT_EQ(cli("export-trajectories --out " + (w / "t.csv").string()), 0);
  const auto csv = pipeline::read_file(w / "t.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "from,kind,index,x,y,mark");
  EXPECT_NE(csv.find("waiting_node"), std::string::npos);
}

TEST(Cli, ScalarVersusFittedHistograms) {
  TempDir w;
  const std::string fits = (kData / "default_fits.json").string();
  ASSERT_EQ(cli("simulate --seed 8 --duration 3600 --param-source scalar --out " + (w / "scalar").string()), 0);
  ASSERT_EQ(cli("simulate --seed 8 --duration 3600 --param-source fitted --fits " + fits + " --out " + (w / "fitted").string()), 0);
  const auto scalar = pipeline::read_log(w / "scalar");
  const auto fitted = pipeline::read_log(w / "fitted");
  std::size_t clustered = 0, free_scalar = 0;
  for (const auto& c : scalar.cyclists) {
    if (c.obstructed || !c.completed) continue;
    ++free_scalar;
    clustered += std::abs(c.max_speed - 5.56) < 1e-9;
  }
  EXPECT_GT(free_scalar, 0u);
  EXPECT_EQ(clustered, free_scalar);
  const auto hs = eval::observed_kinematics_histogram(scalar.records);
  const auto hf = eval::observed_kinematics_histogram(fitted.records);
  auto occupied = [](const eval::Histogram& h) {
    return std::count_if(h.counts.begin(), h.counts.end(), [](std::size_t n) { return n > 0; });
  };
  EXPECT_GT(occupied(hf.max_speed), 3 * occupied(hs.max_speed));
}

TEST(Cli, LaneOnlyShiftsDurationsRight) {
  TempDir w;
  ASSERT_EQ(cli("simulate --seed 4 --duration 3600 --out " + (w / "mixed").string()), 0);
  ASSERT_EQ(cli("simulate --seed 4 --duration 3600 --lane-only --out " + (w / "lane").string()), 0);
  const auto mixed = eval::crossing_durations(pipeline::read_log(w / "mixed", false));
  const auto lane = eval::crossing_durations(pipeline::read_log(w / "lane", false));
  const auto r = eval::compare(mixed, lane);
  EXPECT_GT(r.mean_b, r.mean_a);
  for (const auto& row : r.quantiles) EXPECT_GE(row.b, row.a) << row.q;
}

TEST(DefaultFits, ReproduceTheReportedShares) {
  const auto fits = pipeline::read_fits(kData / "default_fits.json");
  EXPECT_TRUE(fits.accel.converged);
  EXPECT_TRUE(fits.speed.converged);
  Rng ra = Rng::stream(1, "a"), rv = Rng::stream(1, "v");
  const auto a = distfit::sample(fits.accel.dist, ra, 200'000);
  const auto v = distfit::sample(fits.speed.dist, rv, 200'000);
  EXPECT_NEAR(kinematics::fraction_above(a, 1.2, kinematics::Threshold::AtLeast), 0.077, 0.01);
  EXPECT_NEAR(kinematics::fraction_above(v, 5.56, kinematics::Threshold::Above), 0.867, 0.01);
}
