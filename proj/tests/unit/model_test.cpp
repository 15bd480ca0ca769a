#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "statecurve/model.hpp"

namespace statecurve {
namespace {

TEST(PromptSet, MinimalPair) {
  auto set = PromptSet::create({{"boiled water", 1}, {"unboiled water", -1}});
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.signs()[0], 1.0);
  EXPECT_EQ(set.signs()[1], -1.0);
}

TEST(PromptSet, FiftyPrompts) {
  std::vector<Prompt> p;
  for (int i = 0; i < 50; ++i) p.push_back({(i % 2 ? "a boiled pot " : "the unboiled water ") + std::to_string(i), i % 2 ? 1 : -1});
  EXPECT_EQ(PromptSet::create(p).size(), 50u);
}

TEST(PromptSet, ReportsEveryViolation) {
  try {
    PromptSet::create({{"x", 0}, {"", 1}, {"y", 1}, {"y", 1}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_prompt_set);
    EXPECT_EQ(e.violations().size(), 3u);
    EXPECT_NE(std::string(e.what()).find("invalid polarity"), std::string::npos);
  }
  EXPECT_THROW(PromptSet::create({}), Error);
}

TEST(PromptSet, HashDependsOnOrderAndPolarity) {
  auto a = PromptSet::create({{"x", 1}, {"y", -1}});
  auto b = PromptSet::create({{"y", -1}, {"x", 1}});
  auto c = PromptSet::create({{"x", -1}, {"y", -1}});
  EXPECT_NE(a.content_hash(), b.content_hash());
  EXPECT_NE(a.content_hash(), c.content_hash());
  EXPECT_EQ(a.content_hash(), PromptSet::create({{"x", 1}, {"y", -1}}).content_hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(SimilaritySeries, HundredByFive) {
  std::vector<std::vector<double>> rows(100, std::vector<double>(5, 0.2));
  auto s = SimilaritySeries::create(rows, 10.0);
  EXPECT_EQ(s.frames(), 100u);
  EXPECT_EQ(s.channels(), 5u);
  EXPECT_DOUBLE_EQ(s.time_at(37), 3.7);
}

TEST(SimilaritySeries, Rejections) {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  EXPECT_EQ(code_of([] { SimilaritySeries::create({{0.1, 0.2}}, 10.0); }), ErrorCode::invalid_series);
  EXPECT_EQ(code_of([] { SimilaritySeries::create({{0.1}, {1.3}}, 10.0); }), ErrorCode::invalid_series);
  EXPECT_EQ(code_of([] { SimilaritySeries::create({{0.1, 0.2}, {0.1}}, 10.0); }), ErrorCode::invalid_series);
  EXPECT_EQ(code_of([] { SimilaritySeries::create({{0.1}, {0.2}}, 0.0); }), ErrorCode::invalid_series);
  EXPECT_EQ(code_of([] { SimilaritySeries::create({{0.1}, {0.2}}, 10.0, std::vector<double>{1.0, 1.0}); }),
            ErrorCode::invalid_series);
  EXPECT_EQ(code_of([] { SimilaritySeries::create({{0.1}, {std::nan("")}}, 10.0); }), ErrorCode::invalid_series);
}

TEST(SimilaritySeries, OutOfRangeMessage) {
  try {
    SimilaritySeries::create({{0.1}, {1.3}}, 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
  }
}

TEST(SimilaritySeries, LenientClamps) {
  auto s = SimilaritySeries::create({{1.3, 0.0}, {-1.5, 0.5}}, 10.0, std::nullopt, IngestMode::lenient);
  EXPECT_EQ(s.at(0, 0), 1.0);
  EXPECT_EQ(s.at(1, 0), -1.0);
  EXPECT_EQ(s.clamped_count(), 2u);
}

TEST(SimilaritySeries, TimestampsOverrideRate) {
  auto s = SimilaritySeries::create({{0.1}, {0.2}, {0.3}}, 10.0, std::vector<double>{0.0, 0.15, 0.31});
  EXPECT_EQ(s.time_at(2), 0.31);
}

TEST(SimilaritySeries, FlatRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t t = 2 + rng() % 30, n = 1 + rng() % 6;
    std::vector<std::vector<double>> rows(t, std::vector<double>(n));
    for (auto& r : rows)
      for (auto& v : r) v = u(rng);
    auto a = SimilaritySeries::create(rows, 10.0);
    auto b = SimilaritySeries::from_flat(std::vector<double>(a.values().begin(), a.values().end()), t, n, 10.0);
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a.column(i)[t - 1], rows[t - 1][i]);
  }
}

TEST(WeightVector, Validation) {
  EXPECT_THROW(WeightVector({}), Error);
  EXPECT_THROW(WeightVector({0.5, 1.2}), Error);
  EXPECT_THROW(WeightVector({-0.1}), Error);
  EXPECT_TRUE(WeightVector({0.0, 0.0}).degenerate());
  EXPECT_FALSE(WeightVector({0.0, 1e-6}).degenerate());
  EXPECT_EQ(WeightVector::one_hot(3, 1), WeightVector({0.0, 1.0, 0.0}));
  EXPECT_EQ(WeightVector::ones(2).sum(), 2.0);
}

TEST(NormalizationParams, FlatIsRejected) {
  NormalizationParams p{0.3, 0.3, 30};
  try {
    p.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::flat_signal);
  }
  EXPECT_NO_THROW((NormalizationParams{0.2, 0.6, 30}.validate()));
}

TEST(DetectionReport, DiffOnlyWithBothTimes) {
  auto r = make_report(7.3, 8.0, 0.8, {});
  ASSERT_TRUE(r.t_diff);
  EXPECT_NEAR(*r.t_diff, 0.7, 1e-12);
  EXPECT_FALSE(make_report(std::nullopt, 8.0, 0.8, {}).t_diff);
  EXPECT_FALSE(make_report(7.3, std::nullopt, 0.8, {}).t_diff);
  EXPECT_FALSE(make_report(std::nullopt, 8.0, 0.8, {}).detected());
}

}  // namespace
}  // namespace statecurve
