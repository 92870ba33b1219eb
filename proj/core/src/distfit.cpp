#include "cyclesim/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "cyclesim/error.hpp"
#include "nelder_mead.hpp"

namespace cyclesim::distfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_unit(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw Error(ErrorCode::QuantileDomain, "quantile argument must lie in (0, 1)");
  }
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sd_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

// --- Burr XII -------------------------------------------------------------

BurrXII::BurrXII(BurrXIIParams p) : p_(p) {
  if (!positive_finite(p.c) || !positive_finite(p.k) || !positive_finite(p.scale)) {
    throw Error(ErrorCode::InvalidParameters, "Burr XII parameters must be positive and finite");
  }
}

double BurrXII::log_pdf(double x) const {
  if (!(x > 0.0)) return -kInf;
  const double ly = std::log(x / p_.scale);
  return std::log(p_.c * p_.k / p_.scale) + (p_.c - 1.0) * ly - (p_.k + 1.0) * softplus(p_.c * ly);
}

double BurrXII::pdf(double x) const {
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (p_.c < 1.0) return kInf;
    return p_.c == 1.0 ? p_.k / p_.scale : 0.0;
  }
  return std::exp(log_pdf(x));
}

double BurrXII::cdf(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double lyc = p_.c * std::log(x / p_.scale);
  return -std::expm1(-p_.k * softplus(lyc));
}

double BurrXII::quantile(double u) const {
  check_unit(u);
  // (1 - u)^(-1/k) - 1, evaluated without cancellation near u = 0.
  const double t = std::expm1(-std::log1p(-u) / p_.k);
  return p_.scale * std::pow(t, 1.0 / p_.c);
}

// --- Johnson S_U ----------------------------------------------------------

JohnsonSU::JohnsonSU(JohnsonSUParams p) : p_(p) {
  if (!std::isfinite(p.gamma) || !std::isfinite(p.xi) || !positive_finite(p.delta) ||
      !positive_finite(p.lambda)) {
    throw Error(ErrorCode::InvalidParameters, "Johnson SU needs finite gamma/xi, positive delta/lambda");
  }
}

double JohnsonSU::log_pdf(double x) const {
  const double y = (x - p_.xi) / p_.lambda;
  const double z = p_.gamma + p_.delta * std::asinh(y);
  return std::log(p_.delta / p_.lambda) - 0.5 * std::log(2.0 * std::numbers::pi) -
         std::log(std::hypot(1.0, y)) - 0.5 * z * z;
}

double JohnsonSU::pdf(double x) const { return std::exp(log_pdf(x)); }

double JohnsonSU::cdf(double x) const {
  const double z = p_.gamma + p_.delta * std::asinh((x - p_.xi) / p_.lambda);
  return normal_cdf(z);
}

double JohnsonSU::quantile(double u) const {
  check_unit(u);
  return p_.xi + p_.lambda * std::sinh((normal_quantile(u) - p_.gamma) / p_.delta);
}

// --- normal ---------------------------------------------------------------

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  check_unit(p);
  // Acklam's rational approximation followed by one Halley step on erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Refine against the tail that is represented accurately.
  const double e = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

// --- variant helpers ------------------------------------------------------

std::string_view to_string(Family f) noexcept {
  return f == Family::BurrXII ? "burr12" : "johnson_su";
}

Family family_of(const Distribution& d) noexcept {
  return std::holds_alternative<BurrXII>(d) ? Family::BurrXII : Family::JohnsonSU;
}

double pdf(const Distribution& d, double x) {
  return std::visit([x](const auto& dist) { return dist.pdf(x); }, d);
}
double cdf(const Distribution& d, double x) {
  return std::visit([x](const auto& dist) { return dist.cdf(x); }, d);
}
double quantile(const Distribution& d, double u) {
  return std::visit([u](const auto& dist) { return dist.quantile(u); }, d);
}

std::vector<double> sample(const Distribution& d, Rng& rng, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(d, rng.uniform()));
  return out;
}

std::vector<double> sample_from_uniforms(const Distribution& d, std::span<const double> uniforms) {
  std::vector<double> out;
  out.reserve(uniforms.size());
  for (double u : uniforms) out.push_back(quantile(d, u));
  return out;
}

double log_likelihood(const Distribution& d, std::span<const double> samples) {
  return std::visit(
      [&](const auto& dist) {
        double ll = 0.0;
        for (double x : samples) ll += dist.log_pdf(x);
        return ll;
      },
      d);
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& F) {
  if (samples.empty()) throw Error(ErrorCode::EmptyList, "KS statistic of empty sample");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = F(xs[i]);
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, std::abs(above), std::abs(below)});
  }
  return std::min(d, 1.0);
}

double ks_statistic(std::span<const double> samples, const Distribution& d) {
  return ks_statistic(samples, [&d](double x) { return cdf(d, x); });
}

// --- fitting --------------------------------------------------------------

Distribution initial_guess(std::span<const double> samples, Family family) {
  if (family == Family::BurrXII) {
    // With k = 1 the Burr XII is log-logistic: log X has median log(scale)
    // and standard deviation pi / (c sqrt 3).
    std::vector<double> logs;
    logs.reserve(samples.size());
    for (double x : samples) logs.push_back(std::log(x));
    const double sd = sd_of(logs);
    const double c = std::numbers::pi / (std::sqrt(3.0) * sd);
    return BurrXII({c, 1.0, std::exp(median_of(logs))});
  }
  // S_U with gamma = 0, delta = 1 has variance lambda^2 (e^2 - 1) / 2.
  // Match the sample variance and centre on the median.
  const double sd = sd_of(samples);
  const double lambda = sd / std::sqrt((std::exp(2.0) - 1.0) / 2.0);
  return JohnsonSU({0.0, 1.0, median_of({samples.begin(), samples.end()}), lambda});
}

FitResult fit_mle(std::span<const double> samples, Family family, std::optional<Distribution> init,
                  const FitOptions& opts) {
  if (samples.size() < 50) {
    throw Error(ErrorCode::InsufficientData,
                "fit needs at least 50 samples, got " + std::to_string(samples.size()));
  }
  for (double x : samples) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidParameters, "non-finite sample");
    if (family == Family::BurrXII && !(x > 0.0)) {
      throw Error(ErrorCode::NonPositiveSample, "Burr XII fit requires positive samples");
    }
  }
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mn == *mx) throw Error(ErrorCode::ZeroVariance, "all samples are equal");

  const Distribution start = init ? *init : initial_guess(samples, family);
  if (family_of(start) != family) {
    throw Error(ErrorCode::InvalidParameters, "initial guess belongs to a different family");
  }
  const double n = static_cast<double>(samples.size());

  // Search coordinates: log of positive parameters; JSU location is
  // standardised by the sample spread so every coordinate is O(1).
  std::vector<double> x0, step;
  std::function<Distribution(const std::vector<double>&)> decode;
  if (family == Family::BurrXII) {
    const auto& p = std::get<BurrXII>(start).params();
    x0 = {std::log(p.c), std::log(p.k), std::log(p.scale)};
    step = {0.2, 0.2, 0.2};
    decode = [](const std::vector<double>& v) {
      return Distribution(BurrXII({std::exp(v[0]), std::exp(v[1]), std::exp(v[2])}));
    };
  } else {
    const auto& p = std::get<JohnsonSU>(start).params();
    const double spread = sd_of(samples);
    x0 = {p.gamma, std::log(p.delta), p.xi / spread, std::log(p.lambda)};
    step = {0.3, 0.2, 0.2, 0.2};
    decode = [spread](const std::vector<double>& v) {
      return Distribution(JohnsonSU({v[0], std::exp(v[1]), v[2] * spread, std::exp(v[3])}));
    };
  }

  auto objective = [&](const std::vector<double>& v) {
    for (double c : v) {
      if (!std::isfinite(c) || std::abs(c) > 700.0) return kInf;
    }
    try {
      return -log_likelihood(decode(v), samples) / n;
    } catch (const Error&) {
      return kInf;
    }
  };

  auto res = detail::nelder_mead(objective, x0, step, opts.tolerance, opts.max_iterations);
  FitResult out{decode(res.x), -res.f * n, 1.0, samples.size(), res.converged, res.iterations};
  out.ks_statistic = ks_statistic(samples, out.dist);
  return out;
}

// --- JSON -----------------------------------------------------------------

namespace {

nlohmann::json dist_json(const Distribution& d) {
  nlohmann::json j;
  j["family"] = std::string(to_string(family_of(d)));
  if (const auto* b = std::get_if<BurrXII>(&d)) {
    j["params"] = {{"c", b->params().c}, {"k", b->params().k}, {"scale", b->params().scale}};
  } else {
    const auto& p = std::get<JohnsonSU>(d).params();
    j["params"] = {{"gamma", p.gamma}, {"delta", p.delta}, {"xi", p.xi}, {"lambda", p.lambda}};
  }
  return j;
}

Distribution dist_from(const nlohmann::json& j) {
  try {
    const auto family = j.at("family").get<std::string>();
    const auto& p = j.at("params");
    if (family == "burr12") {
      return BurrXII({p.at("c").get<double>(), p.at("k").get<double>(), p.at("scale").get<double>()});
    }
    if (family == "johnson_su") {
      return JohnsonSU({p.at("gamma").get<double>(), p.at("delta").get<double>(),
                        p.at("xi").get<double>(), p.at("lambda").get<double>()});
    }
    throw Error(ErrorCode::InvalidConfig, "unknown distribution family '" + family + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("distribution JSON: ") + e.what());
  }
}

nlohmann::json parse_or_throw(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string distribution_to_json(const Distribution& d) { return dist_json(d).dump(2); }

Distribution distribution_from_json(std::string_view text) { return dist_from(parse_or_throw(text)); }

std::string to_json(const FitResult& r) {
  auto j = dist_json(r.dist);
  j["log_likelihood"] = r.log_likelihood;
  j["ks"] = r.ks_statistic;
  j["n"] = r.n;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  return j.dump(2);
}

FitResult fit_result_from_json(std::string_view text) {
  const auto j = parse_or_throw(text);
  FitResult r{dist_from(j)};
  try {
    r.log_likelihood = j.at("log_likelihood").get<double>();
    r.ks_statistic = j.at("ks").get<double>();
    r.n = j.at("n").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.value("iterations", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("fit result JSON: ") + e.what());
  }
  return r;
}

}  // namespace cyclesim::distfit
