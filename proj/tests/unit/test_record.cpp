#include <gtest/gtest.h>

#include <random>

#include "buzzdet/record.hpp"
#include "oracles.hpp"

using namespace buzzdet;

TEST(ResampleDepth, ConstantStaysConstant) {
  const std::vector<double> d(37, 5.0);
  for (double v : resample_depth(d, 370)) EXPECT_EQ(v, 5.0);
  for (double v : resample_depth(d, 365)) EXPECT_EQ(v, 5.0);
}

TEST(ResampleDepth, LinearRampThenHold) {
  const std::vector<double> d = {0.0, 10.0};
  const auto out = resample_depth(d, 20);
  ASSERT_EQ(out.size(), 20u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(out[i], static_cast<double>(i));
  for (std::size_t i = 10; i < 20; ++i) EXPECT_EQ(out[i], 10.0);
}

TEST(ResampleDepth, SingleSampleHeld) {
  const std::vector<double> d = {7.3};
  const auto out = resample_depth(d, 10);
  ASSERT_EQ(out.size(), 10u);
  for (double v : out) EXPECT_EQ(v, 7.3);
}

TEST(ResampleDepth, SlackBeyondOneSampleRejected) {
  const std::vector<double> d(10, 1.0);
  EXPECT_NO_THROW(resample_depth(d, 90));
  EXPECT_NO_THROW(resample_depth(d, 110));
  EXPECT_THROW(resample_depth(d, 89), AlignmentError);
  EXPECT_THROW(resample_depth(d, 111), AlignmentError);
}

TEST(ResampleDepth, NeverOvershootsSourceRange) {
  oracle::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = oracle::normal_vec(rng, 1 + rng() % 200, 30.0);
    const auto out = resample_depth(d, 10 * d.size() + rng() % 11);
    EXPECT_EQ(*std::min_element(out.begin(), out.end()), *std::min_element(d.begin(), d.end()));
    EXPECT_EQ(*std::max_element(out.begin(), out.end()), *std::max_element(d.begin(), d.end()));
  }
}

TEST(ExpandBuzz, RepeatByTen) {
  const std::vector<std::uint8_t> b = {0, 1, 0};
  const auto out = expand_buzz_labels(b, 30);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(out[i], (i >= 10 && i < 20) ? 1 : 0);
}

TEST(ExpandBuzz, HoldsLastLabelOnSlack) {
  const std::vector<std::uint8_t> b = {1};
  const auto out = expand_buzz_labels(b, 12);
  EXPECT_EQ(out, std::vector<std::uint8_t>(12, 1));
  const std::vector<std::uint8_t> z(5, 0);
  EXPECT_EQ(expand_buzz_labels(z, 50), std::vector<std::uint8_t>(50, 0));
}

TEST(ExpandBuzz, NonBinaryRejected) {
  const std::vector<std::uint8_t> b = {0, 2};
  EXPECT_THROW(expand_buzz_labels(b, 20), ValidationError);
}

TEST(ExpandBuzz, MajorityDownsampleRecoversSource) {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto src = oracle::markov_labels(rng, 1 + rng() % 300, 0.1, 0.3);
    const auto up = expand_buzz_labels(src, src.size() * 10);
    for (std::size_t k = 0; k < src.size(); ++k) {
      int ones = 0;
      for (std::size_t i = 10 * k; i < 10 * k + 10; ++i) ones += up[i];
      EXPECT_EQ(ones > 5 ? 1 : 0, src[k]);
    }
  }
}

namespace {

RawChannels raw_of(std::size_t n100, std::size_t n10) {
  RawChannels raw;
  raw.whale_id = "w";
  raw.accel_x.assign(n100, 1.0);
  raw.accel_y.assign(n100, 2.0);
  raw.accel_z.assign(n100, 3.0);
  raw.depth.assign(n10, 0.0);
  return raw;
}

}  // namespace

TEST(BuildRecord, RasterizesIntervalsHalfOpen) {
  auto raw = raw_of(500, 50);
  raw.buzz = BuzzIntervals{{1.0, 2.0}};
  const auto rec = build_record(raw);
  ASSERT_EQ(rec.size(), 500u);
  for (std::size_t i = 0; i < 500; ++i) EXPECT_EQ(rec.buzz[i], (i >= 100 && i < 200) ? 1 : 0) << i;
}

TEST(BuildRecord, EmptyIntervalListGivesZeros) {
  auto raw = raw_of(300, 30);
  raw.buzz = BuzzIntervals{};
  const auto rec = build_record(raw);
  EXPECT_EQ(rec.buzz, std::vector<std::uint8_t>(300, 0));
}

TEST(BuildRecord, OverlappingIntervalsRejected) {
  auto raw = raw_of(500, 50);
  raw.buzz = BuzzIntervals{{1.0, 2.0}, {1.5, 3.0}};
  EXPECT_THROW(build_record(raw), ValidationError);
  raw.buzz = BuzzIntervals{{2.0, 3.0}, {0.5, 1.0}};
  EXPECT_THROW(build_record(raw), ValidationError);
}

TEST(BuildRecord, OutputLengthFollowsAccel) {
  oracle::Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n10 = 5 + rng() % 100;
    const std::size_t n100 = 10 * n10 - 10 + rng() % 21;
    auto raw = raw_of(n100, n10);
    raw.buzz = oracle::markov_labels(rng, n10, 0.2, 0.2);
    const auto rec = build_record(raw);
    EXPECT_EQ(rec.size(), n100);
    EXPECT_EQ(rec.depth.size(), n100);
    EXPECT_EQ(rec.buzz.size(), n100);
    EXPECT_EQ(rec.phase.size(), n100);
  }
}

TEST(BuildRecord, AccelAxesMustAgree) {
  auto raw = raw_of(100, 10);
  raw.accel_y.pop_back();
  EXPECT_THROW(build_record(raw), AlignmentError);
}

TEST(BuildRecord, DeepNegativeDepthRejected) {
  auto raw = raw_of(100, 10);
  raw.buzz = BuzzIntervals{};
  raw.depth[3] = -1.5;
  EXPECT_THROW(build_record(raw), ValidationError);
  raw.depth[3] = -0.9;
  EXPECT_NO_THROW(build_record(raw));
}

TEST(PositiveRate, Basics) {
  EXPECT_EQ(positive_rate(std::vector<std::uint8_t>(100, 0)), 0.0);
  std::vector<std::uint8_t> b(10000, 0);
  std::fill(b.begin() + 4000, b.begin() + 4100, 1);  // one 1 s buzz in 100 s
  EXPECT_DOUBLE_EQ(positive_rate(b), 0.01);
  EXPECT_THROW(positive_rate(std::vector<std::uint8_t>{}), ValidationError);
}

TEST(SkipLeading, DropsSamplesAndShiftsIntervals) {
  auto raw = raw_of(1000, 100);
  for (std::size_t i = 0; i < 100; ++i) raw.depth[i] = static_cast<double>(i);
  raw.buzz = BuzzIntervals{{1.0, 2.0}, {3.0, 4.5}};
  const auto out = skip_leading(raw, 2.5);
  EXPECT_EQ(out.accel_x.size(), 750u);
  EXPECT_EQ(out.depth.size(), 75u);
  EXPECT_EQ(out.depth[0], 25.0);
  const auto& iv = std::get<BuzzIntervals>(out.buzz);
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_DOUBLE_EQ(iv[0].start_s, 0.5);
  EXPECT_DOUBLE_EQ(iv[0].end_s, 2.0);
  EXPECT_THROW(skip_leading(raw, 20.0), ValidationError);
}

TEST(Slice, CopiesRange) {
  auto raw = raw_of(200, 20);
  raw.buzz = BuzzIntervals{{0.5, 1.0}};
  const auto rec = build_record(raw);
  const auto s = slice(rec, 40, 120);
  EXPECT_EQ(s.size(), 80u);
  EXPECT_EQ(s.buzz[10], 1);
  EXPECT_EQ(s.buzz[9], 0);
}
