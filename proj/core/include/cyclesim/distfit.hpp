#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cyclesim/random.hpp"

namespace cyclesim::distfit {

struct BurrXIIParams {
  double c = 1.0;      // shape
  double k = 1.0;      // shape
  double scale = 1.0;  // lambda, units of the modelled quantity

  bool operator==(const BurrXIIParams&) const = default;
};

struct JohnsonSUParams {
  double gamma = 0.0;   // shape
  double delta = 1.0;   // shape, > 0
  double xi = 0.0;      // location
  double lambda = 1.0;  // scale, > 0

  bool operator==(const JohnsonSUParams&) const = default;
};

/// Burr Type XII on (0, inf):
///   F(x) = 1 - (1 + (x/scale)^c)^-k
class BurrXII {
 public:
  explicit BurrXII(BurrXIIParams p);

  const BurrXIIParams& params() const noexcept { return p_; }
  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;

  bool operator==(const BurrXII&) const = default;

 private:
  BurrXIIParams p_;
};

/// Johnson S_U on the whole real line:
///   z = gamma + delta * asinh((x - xi) / lambda),  F(x) = Phi(z)
class JohnsonSU {
 public:
  explicit JohnsonSU(JohnsonSUParams p);

  const JohnsonSUParams& params() const noexcept { return p_; }
  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  double quantile(double u) const;

  bool operator==(const JohnsonSU&) const = default;

 private:
  JohnsonSUParams p_;
};

using Distribution = std::variant<BurrXII, JohnsonSU>;

enum class Family { BurrXII, JohnsonSU };

std::string_view to_string(Family f) noexcept;
Family family_of(const Distribution& d) noexcept;

double pdf(const Distribution& d, double x);
double cdf(const Distribution& d, double x);
double quantile(const Distribution& d, double u);

/// Standard normal CDF and its inverse (absolute error well below 1e-12).
double normal_cdf(double z) noexcept;
double normal_quantile(double p);

/// Inverse-transform sampling: every value is quantile(U) for U ~ (0, 1).
std::vector<double> sample(const Distribution& d, Rng& rng, std::size_t n);
std::vector<double> sample_from_uniforms(const Distribution& d, std::span<const double> uniforms);

double log_likelihood(const Distribution& d, std::span<const double> samples);

/// One-sample Kolmogorov-Smirnov distance.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);
double ks_statistic(std::span<const double> samples, const Distribution& d);

struct FitOptions {
  std::size_t max_iterations = 10'000;
  double tolerance = 1e-8;  // on the mean log-likelihood per sample
};

struct FitResult {
  Distribution dist;
  double log_likelihood = 0.0;
  double ks_statistic = 1.0;
  std::size_t n = 0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Moment/quantile based starting point for the simplex search.
Distribution initial_guess(std::span<const double> samples, Family family);

/// Maximum-likelihood fit by Nelder-Mead over log-transformed positive
/// parameters. A run that exhausts its iteration budget returns the best
/// point found with converged = false.
FitResult fit_mle(std::span<const double> samples, Family family,
                  std::optional<Distribution> init = std::nullopt, const FitOptions& opts = {});

// JSON exchange format: {family, params{...}, log_likelihood, ks, n, converged}
std::string to_json(const FitResult& r);
FitResult fit_result_from_json(std::string_view text);

std::string distribution_to_json(const Distribution& d);
Distribution distribution_from_json(std::string_view text);

}  // namespace cyclesim::distfit
