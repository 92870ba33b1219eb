#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cyclesim/simcore.hpp"

namespace cyclesim::eval {

/// Empirical CDF: sorted values with fractions i/n.
struct Ecdf {
  std::vector<double> values;
  std::vector<double> fractions;

  std::size_t size() const noexcept { return values.size(); }
  /// Fraction of values <= x.
  double operator()(double x) const noexcept;
  /// Inverse ECDF (type 1): smallest value v with F(v) >= q, q in (0, 1].
  double quantile(double q) const;
};

/// Throws EmptyList.
Ecdf ecdf(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

inline constexpr double kDeciles[] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

struct QuantileRow {
  double q = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct ComparisonReport {
  double ks = 0.0;
  std::vector<QuantileRow> quantiles;  // at kDeciles
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Throws EmptyList when either side is empty.
ComparisonReport compare(std::span<const double> a, std::span<const double> b);

/// exit - entry for every completed left-turner (direct or indirect) with
/// both timestamps. Through traffic is excluded.
std::vector<double> crossing_durations(const sim::TrajectoryLog& log);
std::vector<double> crossing_durations(const sim::TrajectoryLog& log, sim::TurnKind kind);

struct CyclistMaxima {
  std::uint64_t id = 0;
  double max_accel = 0.0;  // largest per-step speed increase / step, m/s^2
  double max_speed = 0.0;  // m/s
};

/// Per-cyclist maxima recomputed from the step records, ordered by id.
std::vector<CyclistMaxima> observed_maxima(std::span<const sim::StepRecord> records);

struct Histogram {
  double width = 0.0;
  std::int64_t first_bin = 0;  // bin i covers [(first_bin+i)*width, (first_bin+i+1)*width)
  std::vector<std::size_t> counts;

  std::size_t total() const noexcept;
};

/// Values are assigned to floor(x / width) with a 1e-9 guard against
/// representation error, so 5.5 with width 0.25 lands in [5.5, 5.75).
Histogram histogram(std::span<const double> values, double width);

struct KinematicsHistograms {
  Histogram max_accel;
  Histogram max_speed;
};

KinematicsHistograms observed_kinematics_histogram(std::span<const sim::StepRecord> records,
                                                   double accel_width = 0.1,
                                                   double speed_width = 0.25);

// Artifacts.
std::string to_json(const ComparisonReport& r);
/// Rows "series,value,fraction".
std::string ecdf_csv(const std::vector<std::pair<std::string, Ecdf>>& series);
/// Rows "quantity,bin_start,bin_end,count".
std::string hist_csv(const KinematicsHistograms& h);

}  // namespace cyclesim::eval
