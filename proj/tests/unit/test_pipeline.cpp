#include <gtest/gtest.h>

#include "buzzdet/pipeline.hpp"
#include "oracles.hpp"

using namespace buzzdet;

namespace {

WhaleRecord two_dive_record() {
  auto depth = oracle::trapezoid(10.0, 30.0, 20.0, 30.0, 10.0, 40.0);
  const auto second = oracle::trapezoid(10.0, 30.0, 20.0, 30.0, 10.0, 40.0);
  depth.insert(depth.end(), second.begin(), second.end());
  WhaleRecord r;
  r.whale_id = "p";
  r.depth = depth;
  r.ax.assign(depth.size(), 0.0);
  r.ay = r.az = r.ax;
  r.phase = annotate_phases(depth);
  r.buzz.assign(depth.size(), 0);
  for (std::size_t i = 5000; i < 5100; ++i) r.buzz[i] = 1;
  for (std::size_t i = 15000; i < 15100; ++i) r.buzz[i] = 1;
  return r;
}

}  // namespace

TEST(Pipeline, TabularDatasetDropsStraddlingWindows) {
  WhaleRecord r;
  r.whale_id = "t";
  r.ax.assign(1000, 0.0);
  r.ay = r.az = r.depth = r.ax;
  r.phase.assign(1000, DivePhase::Surface);
  r.buzz.assign(1000, 0);
  const std::vector<WhaleRecord> recs{r};
  const auto plan = models::split(recs, models::SplitMode::Chrono602020);
  EXPECT_EQ(pipeline::tabular_dataset(recs, plan.folds[0], models::Part::Train).rows, 11u);
  EXPECT_EQ(pipeline::tabular_dataset(recs, plan.folds[0], models::Part::Val).rows, 3u);
  const auto test = pipeline::tabular_dataset(recs, plan.folds[0], models::Part::Test);
  EXPECT_EQ(test.rows, 3u);
  EXPECT_EQ(test.cols, 30u);
}

TEST(Pipeline, PartRange) {
  const auto plan = models::split(std::vector<models::RecordInfo>{{"a", 1000}}, models::SplitMode::Chrono8020);
  EXPECT_EQ(pipeline::part_range(plan.folds[0], 0, models::Part::Test), std::make_pair(std::size_t{800}, std::size_t{1000}));
  EXPECT_FALSE(pipeline::part_range(plan.folds[0], 0, models::Part::Val).has_value());
}

TEST(Pipeline, EvaluateKeepsDivesWhollyInsideTheRange) {
  const auto r = two_dive_record();
  ASSERT_EQ(detect_dives(r.depth).size(), 2u);
  const auto pred = r.buzz;
  const std::size_t half = r.size() / 2;
  const auto all = pipeline::evaluate({{&r, &pred, 0, r.size()}});
  EXPECT_EQ(all.dives.dives.size(), 2u);
  EXPECT_EQ(all.dives.confusion.tp, 2u);
  EXPECT_EQ(all.truth_events, 2u);

  const auto second = pipeline::evaluate({{&r, &pred, half, r.size()}});
  ASSERT_EQ(second.dives.dives.size(), 1u);
  EXPECT_EQ(second.dives.dives[0].truth_count, 1u);
  EXPECT_EQ(second.truth_events, 1u);
  EXPECT_EQ(*second.match.find(eval::CriterionKind::Overlap, 1.0)->proportion, 1.0);

  // A range cutting through the second dive drops it.
  const auto cut = pipeline::evaluate({{&r, &pred, 0, half + 6000}});
  EXPECT_EQ(cut.dives.dives.size(), 1u);
  EXPECT_EQ(cut.dives.surface.truth_count, 1u);

  const std::vector<std::uint8_t> short_pred(10, 0);
  EXPECT_THROW(pipeline::evaluate({{&r, &short_pred, 0, 10}}), ShapeError);
}
