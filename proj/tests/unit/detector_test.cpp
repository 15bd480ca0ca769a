#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "statecurve/detector.hpp"
#include "statecurve/signal.hpp"
#include "statecurve/synth.hpp"

namespace statecurve {
namespace {

const NormalizationParams kIdentity{0.0, 1.0, 1};

TEST(Detector, RampCrossesAt73) {
  Detector d(testing::positive_prompts(1), WeightVector::ones(1), kIdentity);
  std::vector<double> values;
  std::optional<ChangeDetected> event;
  for (std::size_t k = 0; k < 100; ++k) {
    const double x = static_cast<double>(k) / 90.0;
    values.push_back(x);
    const std::vector<double> row{x};
    auto e = d.step(row, static_cast<double>(k) / 10.0);
    if (e) {
      EXPECT_FALSE(event);
      event = e;
    }
  }
  ASSERT_TRUE(event);
  EXPECT_EQ(event->sample, *first_crossing(values, 0.8));
  EXPECT_EQ(event->sample, 73u);
  EXPECT_DOUBLE_EQ(event->t_detected, 7.3);
  EXPECT_TRUE(d.fired());
}

TEST(Detector, ExactlyThresholdDoesNotFire) {
  Detector d(testing::positive_prompts(1), WeightVector::ones(1), kIdentity);
  const std::vector<double> row{0.8};
  for (int k = 0; k < 20; ++k) EXPECT_FALSE(d.step(row, k * 0.1));
  EXPECT_FALSE(d.fired());
  EXPECT_EQ(d.samples_seen(), 20u);
}

TEST(Detector, FiresOnceUntilReset) {
  Detector d(testing::positive_prompts(1), WeightVector::ones(1), kIdentity);
  const std::vector<double> row{0.9};
  EXPECT_TRUE(d.step(row, 0.0));
  EXPECT_FALSE(d.step(row, 0.1));
  d.reset();
  EXPECT_EQ(d.samples_seen(), 0u);
  EXPECT_TRUE(d.step(row, 0.2));
}

TEST(Detector, WindowIsBounded) {
  Detector d(testing::positive_prompts(1), WeightVector::ones(1), NormalizationParams{0.0, 1.0, 5});
  const std::vector<double> row{0.1};
  for (int k = 0; k < 12; ++k) d.step(row, k);
  EXPECT_EQ(d.buffered(), 5u);
}

TEST(Detector, RowLengthChecked) {
  Detector d(testing::positive_prompts(2), WeightVector::ones(2), kIdentity);
  EXPECT_THROW(d.step(std::vector<double>{0.1}, 0.0), Error);
}

TEST(Detector, OnlineMatchesOffline) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.frames = 300;
    spec.n_informative = 3;
    spec.n_noise = 4;
    spec.rng_seed = seed;
    const auto data = synthesize(spec);
    const auto w = WeightVector({1, 0.8, 0.6, 0.2, 0.1, 0.0, 0.3});
    const auto sig = build_aggregate(data.series, data.prompts, w, 30);
    const auto report = evaluate_detection(sig, data.series.times(), data.t_data);

    Detector d(data.prompts, w, sig.normalization);
    std::optional<ChangeDetected> event;
    for (std::size_t t = 0; t < data.series.frames(); ++t) {
      auto e = d.step(data.series.row(t), data.series.time_at(t));
      EXPECT_EQ(d.last_raw(), sig.raw[t]);
      EXPECT_EQ(d.last_averaged(), sig.averaged[t]);
      EXPECT_EQ(d.last_normalized(), sig.normalized[t]);
      if (e) event = e;
    }
    ASSERT_TRUE(event);
    EXPECT_EQ(event->t_detected, *report.t_detected);
  }
}

TEST(Detector, HigherThresholdNeverEarlier) {
  std::mt19937_64 rng(1);
  auto x = testing::sigmoid_channel(300, 0.05, 150, 0.0, 1.0, 0.05, rng);
  std::optional<std::size_t> prev = 0;
  for (double th = 0.1; th < 1.2; th += 0.05) {
    auto c = first_crossing(x, th);
    if (!prev) {
      EXPECT_FALSE(c);
    } else if (c) {
      EXPECT_GE(*c, *prev);
    }
    prev = c;
  }
}

TEST(EvaluateDetection, Arithmetic) {
  AggregateSignal sig;
  sig.normalized = std::vector<double>(100, 0.0);
  std::vector<double> times(100);
  for (std::size_t k = 0; k < 100; ++k) times[k] = k / 10.0;
  for (std::size_t k = 73; k < 100; ++k) sig.normalized[k] = 0.9;
  sig.raw = sig.averaged = sig.normalized;
  auto r = evaluate_detection(sig, times, 8.0);
  ASSERT_TRUE(r.t_diff);
  EXPECT_NEAR(*r.t_diff, 0.7, 1e-12);
  EXPECT_EQ(r.trace.size(), 100u);
  auto none = evaluate_detection(sig, times, 8.0, 0.95);
  EXPECT_FALSE(none.detected());
  EXPECT_FALSE(none.t_diff);
}

TEST(EvaluateDetection, SharpChangeLandsNearAnnotation) {
  SynthSpec spec;
  spec.true_alpha = 0.1;
  spec.annotation_level = 0.95;
  spec.rng_seed = 3;
  const auto data = synthesize(spec);
  std::vector<double> w(data.prompts.size(), 0.0);
  for (std::size_t i = 0; i < spec.n_informative; ++i) w[i] = 1.0;
  const auto sig = build_aggregate(data.series, data.prompts, WeightVector(w), 30);
  const auto r = evaluate_detection(sig, data.series.times(), data.t_data);
  ASSERT_TRUE(r.t_diff);
  EXPECT_LE(*r.t_diff, 1.0);
}

}  // namespace
}  // namespace statecurve
