#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "cyclesim/distfit.hpp"
#include "cyclesim/error.hpp"

using namespace cyclesim;
using namespace cyclesim::distfit;

namespace {

double integrate_burr(const BurrXII& d) {
  boost::math::quadrature::exp_sinh<double> q;
  return q.integrate([&](double x) { return d.pdf(x); }, 0.0, std::numeric_limits<double>::infinity());
}

double integrate_jsu(const JohnsonSU& d) {
  boost::math::quadrature::sinh_sinh<double> q;
  return q.integrate([&](double x) { return d.pdf(x); });
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

}  // namespace

TEST(Burr, ClosedFormExamples) {
  const BurrXII d({1, 1, 1});
  EXPECT_DOUBLE_EQ(d.cdf(1.0), 0.5);
  EXPECT_DOUBLE_EQ(d.quantile(0.5), 1.0);
  EXPECT_EQ(d.cdf(0.0), 0.0);
  EXPECT_EQ(d.cdf(-3.0), 0.0);
  EXPECT_EQ(d.pdf(-1.0), 0.0);
  EXPECT_EQ(BurrXII({3, 2, 1.5}).cdf(0.0), 0.0);
  EXPECT_NEAR(integrate_burr(BurrXII({2, 3, 1})), 1.0, 1e-6);
}

TEST(Burr, PdfMatchesClosedFormDerivative) {
  const BurrXII d({2.5, 1.7, 0.8});
  for (double x : {0.05, 0.3, 0.8, 1.4, 3.0, 9.0}) {
    const double z = std::pow(x / 0.8, 2.5);
    const double expected = 2.5 * 1.7 / 0.8 * std::pow(x / 0.8, 1.5) * std::pow(1 + z, -2.7);
    EXPECT_NEAR(d.pdf(x), expected, 1e-12 * std::max(1.0, expected));
    EXPECT_NEAR(d.log_pdf(x), std::log(expected), 1e-12);
  }
}

TEST(JohnsonSU, ClosedFormExamples) {
  const JohnsonSU d({0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(d.cdf(0.0), 0.5);
  EXPECT_NEAR(d.quantile(0.5), 0.0, 1e-15);
  const JohnsonSU e({0.5, 1.2, 6, 2});
  EXPECT_NEAR(integrate_jsu(e), 1.0, 1e-6);
  // This density puts about 7e-6 of its mass below -50, so a finite
  // window [-50, 50] is short by exactly that tail, not by quadrature error.
  const double tails = e.cdf(-50.0) + (1.0 - e.cdf(50.0));
  EXPECT_GT(tails, 1e-6);
}

TEST(Distributions, InvalidParameters) {
  EXPECT_EQ(code_of([] { BurrXII({0, 1, 1}); }), ErrorCode::InvalidParameters);
  EXPECT_EQ(code_of([] { BurrXII({1, -1, 1}); }), ErrorCode::InvalidParameters);
  EXPECT_EQ(code_of([] { JohnsonSU({0, 0, 0, 1}); }), ErrorCode::InvalidParameters);
  EXPECT_EQ(code_of([] { JohnsonSU({0, 1, NAN, 1}); }), ErrorCode::InvalidParameters);
  for (double u : {0.0, 1.0, -0.1, 1.1}) {
    EXPECT_EQ(code_of([&] { BurrXII({1, 1, 1}).quantile(u); }), ErrorCode::QuantileDomain);
    EXPECT_EQ(code_of([&] { JohnsonSU({0, 1, 0, 1}).quantile(u); }), ErrorCode::QuantileDomain);
  }
}

TEST(Distributions, PropertyCdfMonotoneBoundedAndInvertible) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u01(0, 1);
  const double probes[] = {1e-6, 1e-4, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1 - 1e-4, 1 - 1e-6};
  for (int trial = 0; trial < 100; ++trial) {
    const Distribution dists[] = {
        BurrXII({0.8 + 5 * u01(rng), 0.5 + 3.5 * u01(rng), 0.1 + 5 * u01(rng)}),
        JohnsonSU({-3 + 6 * u01(rng), 0.3 + 4.7 * u01(rng), -10 + 20 * u01(rng), 0.1 + 5 * u01(rng)})};
    for (const auto& d : dists) {
      for (double p : probes) EXPECT_NEAR(cdf(d, quantile(d, p)), p, 1e-10);
      double prev = 0.0;
      for (double x = -30; x < 60; x += 0.37) {
        const double f = cdf(d, x);
        EXPECT_GE(f, prev);
        EXPECT_LE(f, 1.0);
        EXPECT_GE(pdf(d, x), 0.0);
        prev = f;
      }
    }
  }
}

TEST(NormalCdf, AgreesWithReferenceImplementation) {
  const boost::math::normal_distribution<double> n;
  for (double z = -8.0; z <= 8.0; z += 0.01) {
    EXPECT_NEAR(normal_cdf(z), boost::math::cdf(n, z), 1e-14);
  }
  for (double p : {1e-12, 1e-8, 0.001, 0.2, 0.5, 0.77, 0.999, 1 - 1e-9}) {
    EXPECT_NEAR(normal_quantile(p), boost::math::quantile(n, p), 1e-9 * std::max(1.0, std::abs(normal_quantile(p))));
  }
}

TEST(Sample, InverseTransformAndDeterminism) {
  const Distribution b = BurrXII({1, 1, 1});
  const std::vector<double> half = {0.5};
  EXPECT_EQ(sample_from_uniforms(b, half), std::vector<double>{1.0});

  const Distribution j = JohnsonSU({-1, 2, 6, 2});
  Rng r1(42), r2(42), r3(42);
  const auto a = sample(j, r1, 1000);
  EXPECT_EQ(a, sample(j, r2, 1000));
  std::vector<double> u(1000);
  for (auto& e : u) e = r3.uniform();
  EXPECT_EQ(a, sample_from_uniforms(j, u));
}

TEST(Sample, JsuStandardKs) {
  const Distribution d = JohnsonSU({0, 1, 0, 1});
  Rng rng(8);
  EXPECT_LT(ks_statistic(sample(d, rng, 100'000), d), 0.01);
}

TEST(Ks, FormulaExamples) {
  const Distribution d = JohnsonSU({0, 1, 0, 1});
  const std::size_t n = 40;
  std::vector<double> at_quantiles;
  for (std::size_t i = 1; i <= n; ++i) at_quantiles.push_back(quantile(d, (i - 0.5) / n));
  EXPECT_NEAR(ks_statistic(at_quantiles, d), 0.5 / n, 1e-12);
  EXPECT_NEAR(ks_statistic(std::vector<double>{0.0}, d), 0.5, 1e-15);
  EXPECT_EQ(code_of([&] { ks_statistic(std::vector<double>{}, d); }), ErrorCode::EmptyList);
  // Arbitrary callable CDF.
  EXPECT_NEAR(ks_statistic(std::vector<double>{0.25, 0.75}, [](double x) { return x; }), 0.25, 1e-15);
}

TEST(Fit, InputValidation) {
  std::vector<double> few(49, 1.0);
  EXPECT_EQ(code_of([&] { fit_mle(few, Family::BurrXII); }), ErrorCode::InsufficientData);
  std::vector<double> equal(100, 2.5);
  EXPECT_EQ(code_of([&] { fit_mle(equal, Family::JohnsonSU); }), ErrorCode::ZeroVariance);
  EXPECT_EQ(code_of([&] { fit_mle(equal, Family::BurrXII); }), ErrorCode::ZeroVariance);
  std::vector<double> neg(100);
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = static_cast<double>(i) - 3.0;
  EXPECT_EQ(code_of([&] { fit_mle(neg, Family::BurrXII); }), ErrorCode::NonPositiveSample);
  EXPECT_NO_THROW(fit_mle(neg, Family::JohnsonSU));
}

TEST(Fit, ImprovesOnInitialGuessAndReportsHonestly) {
  std::mt19937_64 seeds(4);
  for (int trial = 0; trial < 6; ++trial) {
    Rng rng(seeds());
    const Distribution truth = trial % 2 ? Distribution(BurrXII({2.0 + trial * 0.3, 1.5, 0.6}))
                                         : Distribution(JohnsonSU({-2.0 + trial * 0.4, 3.0, 5.0, 1.0}));
    const auto x = sample(truth, rng, 2000);
    const auto fam = family_of(truth);
    const auto init = initial_guess(x, fam);
    const auto r = fit_mle(x, fam);
    EXPECT_GE(r.log_likelihood, log_likelihood(init, x) - 1e-9);
    EXPECT_NEAR(r.log_likelihood, log_likelihood(r.dist, x), 1e-6 * std::abs(r.log_likelihood));
    EXPECT_NEAR(r.ks_statistic, ks_statistic(x, r.dist), 1e-12);
    EXPECT_EQ(r.n, x.size());
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(family_of(r.dist), fam);
  }
}

TEST(Fit, BudgetExhaustionIsReported) {
  Rng rng(3);
  const auto x = sample(BurrXII({3, 2, 1.5}), rng, 500);
  FitOptions opts;
  opts.max_iterations = 5;
  const auto r = fit_mle(x, Family::BurrXII, std::nullopt, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 5u);
}

TEST(Fit, WrongFamilyFitsWorse) {
  Rng rng(12);
  const auto x = sample(BurrXII({1.5, 4.0, 2.0}), rng, 5000);
  const auto same = fit_mle(x, Family::BurrXII);
  const auto other = fit_mle(x, Family::JohnsonSU);
  EXPECT_LT(same.ks_statistic, other.ks_statistic);
}

TEST(Fit, ModerateSampleRecovery) {
  Rng rng(77);
  const auto x = sample(BurrXII({3, 2, 1.5}), rng, 10'000);
  const auto r = fit_mle(x, Family::BurrXII);
  const auto& p = std::get<BurrXII>(r.dist).params();
  EXPECT_NEAR(p.c, 3.0, 0.3);
  EXPECT_NEAR(p.k, 2.0, 0.3);
  EXPECT_NEAR(p.scale, 1.5, 0.15);
}

TEST(FitJson, RoundTrip) {
  Rng rng(5);
  const auto x = sample(JohnsonSU({-1, 2, 6, 2}), rng, 300);
  const auto r = fit_mle(x, Family::JohnsonSU);
  const auto back = fit_result_from_json(to_json(r));
  EXPECT_EQ(back.dist, r.dist);
  EXPECT_EQ(back.log_likelihood, r.log_likelihood);
  EXPECT_EQ(back.ks_statistic, r.ks_statistic);
  EXPECT_EQ(back.n, r.n);
  EXPECT_EQ(back.converged, r.converged);

  const Distribution b = BurrXII({2.25, 1.5, 0.5});
  EXPECT_EQ(distribution_from_json(distribution_to_json(b)), b);
  EXPECT_THROW(distribution_from_json("{\"family\":\"gamma\",\"params\":{}}"), Error);
  EXPECT_THROW(distribution_from_json("not json"), Error);
}
