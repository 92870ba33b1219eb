#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cyclesim/distfit.hpp"
#include "cyclesim/kinematics.hpp"
#include "cyclesim/simcore.hpp"
#include "cyclesim/synth.hpp"
#include "cyclesim/trace_ingest.hpp"

// File-to-file pipeline stages behind the `cyclesim` command. Every stage
// reads only files and writes only files, so each can be re-run alone.
namespace cyclesim::pipeline {

namespace fs = std::filesystem;

inline constexpr int kArtifactVersion = 1;

std::string read_file(const fs::path& p);
void write_file(const fs::path& p, const std::string& content);

// --- generate ---------------------------------------------------------------

struct GenerateOptions {
  std::size_t n = 10;
  synth::Profile profile = synth::Profile::Realistic;
  std::uint64_t seed = 1;
  synth::GeneratorOptions generator;
  fs::path out_dir;
};

/// Writes <id> ride files plus <id>.truth.json sidecars; returns the ids.
std::vector<std::string> generate(const GenerateOptions& opt);

// --- ingest -----------------------------------------------------------------

struct IngestOptions {
  fs::path in_dir;
  fs::path out_dir;
  ingest::ValidationConfig rules;
  double smooth_bandwidth_s = 6.0;
  unsigned jobs = 1;
};

struct FileOutcome {
  std::string file;
  std::string ride_id;
  bool used = false;
  std::vector<std::string> defects;  // defect names, or "malformed"/"empty_ride"
  std::string error;                 // parse error message, if any
};

struct IngestSummary {
  std::size_t total = 0;
  std::size_t used = 0;
  std::vector<FileOutcome> files;  // sorted by file name
};

/// Ride files are every regular file in in_dir except *.json and dotfiles.
/// Writes cleaned/<id>.csv, smoothed/<id>.csv and ingest_summary.json.
IngestSummary run_ingest(const IngestOptions& opt);

// --- analyze ----------------------------------------------------------------

struct AnalyzeOptions {
  fs::path in_dir;  // an ingest output directory
  fs::path out_dir;
  kinematics::AnalysisConfig analysis;
  unsigned jobs = 1;
};

/// Writes kinematics.json, maneuvers.csv and vmax.csv.
std::vector<kinematics::RideKinematics> run_analyze(const AnalyzeOptions& opt);

// --- fit --------------------------------------------------------------------

struct FitOptions {
  fs::path in_dir;  // an analyze output directory
  fs::path out_file;
  distfit::Family accel_family = distfit::Family::BurrXII;
  distfit::Family speed_family = distfit::Family::JohnsonSU;
};

struct Fits {
  distfit::FitResult accel;
  distfit::FitResult speed;
};

Fits run_fit(const FitOptions& opt);
Fits read_fits(const fs::path& file);

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::optional<fs::path> scenario_file;  // built-in default scenario when absent
  std::optional<fs::path> fits_file;      // required for fitted parameters
  fs::path out_dir;
  // Command-line overrides applied over the scenario's "sim" block.
  std::optional<std::uint64_t> seed;
  std::optional<double> step;
  std::optional<double> duration;
  std::optional<double> cooldown;
  std::optional<double> demand;
  std::optional<double> p_indirect;
  std::optional<bool> lane_only;
  std::optional<std::size_t> max_arrivals;
  std::optional<sim::ParamSource> param_source;
  std::optional<sim::DepartSpeed> depart;
};

/// Resolves the scenario and the effective SimConfig without running.
std::pair<sim::Scenario, sim::SimConfig> resolve_simulation(const SimulateOptions& opt);

/// Writes steps.csv and summary.json.
sim::TrajectoryLog run_simulate(const SimulateOptions& opt);

// --- evaluate ---------------------------------------------------------------

struct EvaluateOptions {
  fs::path log_dir;                       // a simulate output directory
  std::optional<fs::path> reference_dir;  // another one to compare against
  fs::path out_dir;
  double accel_bin = 0.1;
  double speed_bin = 0.25;
};

/// Writes report.json, ecdf.csv and hist.csv. Without a reference the
/// report compares direct (a) against indirect (b) turns within the log.
void run_evaluate(const EvaluateOptions& opt);

/// Reads summary.json and steps.csv of a simulate output directory.
sim::TrajectoryLog read_log(const fs::path& dir, bool with_records = true);

// --- export-trajectories ----------------------------------------------------

/// Rows "from,kind,index,x,y,mark" for every direct, indirect and through
/// crossing; mark is stop_line, waiting_node or empty.
void export_trajectories(const std::optional<fs::path>& scenario_file, const fs::path& out_file);

}  // namespace cyclesim::pipeline
