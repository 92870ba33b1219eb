#include <gtest/gtest.h>

#include "cyclesim/synth.hpp"

using namespace cyclesim;
using namespace cyclesim::synth;

TEST(SpeedProfile, DistanceIsTheIntegralOfSpeed) {
  SpeedProfile p;
  p.v0 = 1.0;
  p.segments = {{4.0, 5.0}, {10.0, 5.0}, {2.5, 0.0}, {3.0, 0.0}};
  EXPECT_DOUBLE_EQ(p.duration(), 19.5);
  double d = 0.0;
  const double h = 1e-4;
  for (double t = 0; t < p.duration() - h / 2; t += h) d += h * p.speed_at(t + h / 2);
  EXPECT_NEAR(p.distance_at(p.duration()), d, 1e-6);
  EXPECT_DOUBLE_EQ(p.distance_at(4.0), 12.0);
  EXPECT_DOUBLE_EQ(p.speed_at(2.0), 3.0);
  EXPECT_DOUBLE_EQ(p.speed_at(100.0), 0.0);
}

TEST(Generate, DeterministicAndIndependentPerRide) {
  const auto a = generate(6, Profile::Realistic, 3);
  const auto b = generate(6, Profile::Realistic, 3);
  const auto more = generate(9, Profile::Realistic, 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].trace, b[i].trace);
    EXPECT_EQ(a[i].trace, more[i].trace);  // ride k ignores how many follow
  }
  EXPECT_EQ(a[0].trace.ride_id, "realistic-0001");
  EXPECT_NE(generate(1, Profile::Realistic, 4)[0].trace, a[0].trace);
}

TEST(Generate, TruthMatchesProfile) {
  for (const auto& r : generate(30, Profile::TwoRamp, 8)) {
    ASSERT_EQ(r.truth.maneuvers.size(), 2u);
    EXPECT_LT(r.truth.maneuvers[0].end_s, r.truth.maneuvers[1].start_s);
    EXPECT_GT(r.truth.v_max, r.truth.maneuvers[0].v_end);
  }
  for (const auto& r : generate(30, Profile::Constant, 8)) {
    EXPECT_TRUE(r.truth.maneuvers.empty());
    EXPECT_GE(r.truth.v_max, 3.0);
    EXPECT_LE(r.truth.v_max, 7.0);
  }
  for (const auto& r : generate(30, Profile::Realistic, 8)) {
    EXPECT_GE(r.truth.maneuvers.size(), 2u);
    EXPECT_GE(r.trace.points.size(), 30u);
  }
}

TEST(Generate, ValidatesCleanly) {
  GeneratorOptions opt;
  opt.gps_noise_m = 1.0;
  for (auto p : {Profile::Constant, Profile::TwoRamp, Profile::Realistic}) {
    for (const auto& r : generate(20, p, 1, opt)) {
      const auto rep = ingest::validate_trace(r.trace);
      EXPECT_TRUE(rep.accepted) << r.trace.ride_id;
      EXPECT_TRUE(rep.defects.empty()) << r.trace.ride_id;
    }
  }
}

TEST(Truth, JsonRoundTrip) {
  const auto r = generate(1, Profile::TwoRamp, 2)[0];
  const auto back = truth_from_json(truth_to_json(r.truth));
  EXPECT_EQ(back.ride_id, r.truth.ride_id);
  EXPECT_EQ(back.profile, Profile::TwoRamp);
  EXPECT_EQ(back.v_max, r.truth.v_max);
  ASSERT_EQ(back.maneuvers.size(), 2u);
  EXPECT_EQ(back.maneuvers[1].accel, r.truth.maneuvers[1].accel);
  EXPECT_THROW(truth_from_json(R"({"schema":"cyclesim.truth","schema_version":9})"), std::exception);
  EXPECT_EQ(profile_from_string("two-ramp"), Profile::TwoRamp);
  EXPECT_FALSE(profile_from_string("zigzag").has_value());
}
