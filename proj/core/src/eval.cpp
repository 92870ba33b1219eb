#include "cyclesim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cyclesim/error.hpp"
#include "text_util.hpp"

namespace cyclesim::eval {

double Ecdf::operator()(double x) const noexcept {
  const auto it = std::upper_bound(values.begin(), values.end(), x);
  return static_cast<double>(it - values.begin()) / static_cast<double>(values.size());
}

double Ecdf::quantile(double q) const {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "quantile of empty ECDF");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorCode::QuantileDomain, "quantile needs q in (0, 1]");
  const double n = static_cast<double>(values.size());
  // Guard n*q against representation error (0.3 * 10 = 3.0000000000000004).
  auto k = static_cast<std::size_t>(std::ceil(n * q - 1e-9));
  k = std::clamp<std::size_t>(k, 1, values.size());
  return values[k - 1];
}

Ecdf ecdf(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "ECDF of empty list");
  Ecdf e;
  e.values.assign(values.begin(), values.end());
  std::sort(e.values.begin(), e.values.end());
  const double n = static_cast<double>(e.values.size());
  e.fractions.resize(e.values.size());
  for (std::size_t i = 0; i < e.values.size(); ++i) e.fractions[i] = static_cast<double>(i + 1) / n;
  return e;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyList, "KS of empty list");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

ComparisonReport compare(std::span<const double> a, std::span<const double> b) {
  const auto ea = ecdf(a);
  const auto eb = ecdf(b);
  ComparisonReport r;
  r.ks = ks_two_sample(a, b);
  for (double q : kDeciles) r.quantiles.push_back({q, ea.quantile(q), eb.quantile(q)});
  r.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  r.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
  r.n_a = a.size();
  r.n_b = b.size();
  return r;
}

std::vector<double> crossing_durations(const sim::TrajectoryLog& log) {
  std::vector<double> out;
  for (const auto& c : log.cyclists) {
    if (!c.completed || c.kind == sim::TurnKind::Through) continue;
    if (const auto d = c.crossing_duration()) out.push_back(*d);
  }
  return out;
}

std::vector<double> crossing_durations(const sim::TrajectoryLog& log, sim::TurnKind kind) {
  std::vector<double> out;
  for (const auto& c : log.cyclists) {
    if (!c.completed || c.kind != kind || kind == sim::TurnKind::Through) continue;
    if (const auto d = c.crossing_duration()) out.push_back(*d);
  }
  return out;
}

std::vector<CyclistMaxima> observed_maxima(std::span<const sim::StepRecord> records) {
  struct Acc {
    CyclistMaxima m;
    double last_t = 0.0;
    double last_v = 0.0;
  };
  std::map<std::uint64_t, Acc> by_id;
  for (const auto& r : records) {
    auto [it, fresh] = by_id.try_emplace(r.id);
    auto& acc = it->second;
    if (fresh) {
      acc.m.id = r.id;
      acc.m.max_speed = r.speed;
    } else {
      const double dt = r.t - acc.last_t;
      if (dt > 0.0) acc.m.max_accel = std::max(acc.m.max_accel, (r.speed - acc.last_v) / dt);
      acc.m.max_speed = std::max(acc.m.max_speed, r.speed);
    }
    acc.last_t = r.t;
    acc.last_v = r.speed;
  }
  std::vector<CyclistMaxima> out;
  out.reserve(by_id.size());
  for (const auto& [id, acc] : by_id) out.push_back(acc.m);
  return out;
}

std::size_t Histogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram histogram(std::span<const double> values, double width) {
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidConfig, "histogram bin width must be > 0");
  Histogram h;
  h.width = width;
  if (values.empty()) return h;
  std::vector<std::int64_t> bins;
  bins.reserve(values.size());
  for (double v : values) bins.push_back(static_cast<std::int64_t>(std::floor(v / width + 1e-9)));
  const auto [lo, hi] = std::minmax_element(bins.begin(), bins.end());
  h.first_bin = *lo;
  h.counts.assign(static_cast<std::size_t>(*hi - *lo + 1), 0);
  for (auto b : bins) ++h.counts[static_cast<std::size_t>(b - h.first_bin)];
  return h;
}

KinematicsHistograms observed_kinematics_histogram(std::span<const sim::StepRecord> records,
                                                   double accel_width, double speed_width) {
  std::vector<double> acc, spd;
  for (const auto& m : observed_maxima(records)) {
    acc.push_back(m.max_accel);
    spd.push_back(m.max_speed);
  }
  return {histogram(acc, accel_width), histogram(spd, speed_width)};
}

std::string to_json(const ComparisonReport& r) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& row : r.quantiles) q.push_back({{"q", row.q}, {"a", row.a}, {"b", row.b}});
  nlohmann::json j = {{"schema", "cyclesim.report"},
                      {"schema_version", sim::kSchemaVersion},
                      {"ks", r.ks},
                      {"quantiles", q},
                      {"mean_a", r.mean_a},
                      {"mean_b", r.mean_b},
                      {"n_a", r.n_a},
                      {"n_b", r.n_b}};
  return j.dump(2);
}

std::string ecdf_csv(const std::vector<std::pair<std::string, Ecdf>>& series) {
  std::ostringstream out;
  out << "series,value,fraction\n";
  for (const auto& [name, e] : series) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      out << name << ',' << detail::format_double(e.values[i]) << ','
          << detail::format_double(e.fractions[i]) << '\n';
    }
  }
  return out.str();
}

std::string hist_csv(const KinematicsHistograms& h) {
  std::ostringstream out;
  out << "quantity,bin_start,bin_end,count\n";
  auto rows = [&](const char* name, const Histogram& hist) {
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      const double lo = static_cast<double>(hist.first_bin + static_cast<std::int64_t>(i)) * hist.width;
      out << name << ',' << detail::format_double(lo) << ','
          << detail::format_double(lo + hist.width) << ',' << hist.counts[i] << '\n';
    }
  };
  rows("max_accel", h.max_accel);
  rows("max_speed", h.max_speed);
  return out.str();
}

}  // namespace cyclesim::eval
