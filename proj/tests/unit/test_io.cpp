#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "buzzdet/feature_io.hpp"
#include "buzzdet/io.hpp"
#include "buzzdet/report_io.hpp"
#include "buzzdet/synth.hpp"

using namespace buzzdet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("buzzdet_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

WhaleRecord small_record() {
  SynthConfig c;
  c.duration_s = 600.0;
  c.rng_seed = 4;
  c.whale_id = "io";
  return synth_generate(c);
}

}  // namespace

TEST(RecordContainer, RoundTripIsExact) {
  auto r = small_record();
  r.t0 = 12.5;
  const auto bytes = io::encode_record(r);
  EXPECT_EQ(bytes.substr(0, 4), "BZRC");
  EXPECT_TRUE(io::decode_record(bytes) == r);
  EXPECT_EQ(io::encode_record(io::decode_record(bytes)), bytes);
}

TEST(RecordContainer, CorruptionIsReported) {
  const auto bytes = io::encode_record(small_record());
  EXPECT_THROW(io::decode_record(bytes.substr(0, bytes.size() / 2)), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_record(bad), FormatError);
  EXPECT_THROW(io::decode_record(bytes + "x"), FormatError);
}

TEST(RawCsv, ReadsAllThreeFormatsAndBuildsRecord) {
  TempDir d;
  const auto r = small_record();
  io::write_file(d.file("a.csv"), io::format_accel_csv(r));
  io::write_file(d.file("d.csv"), io::format_depth_csv(r));
  io::write_file(d.file("b.csv"), io::format_buzz_intervals_csv({{1.0, 2.5}}));
  const auto raw = io::read_raw_channels("x", d.file("a.csv"), d.file("d.csv"), d.file("b.csv"));
  EXPECT_EQ(raw.accel_x, r.ax);
  EXPECT_EQ(raw.depth.size(), r.size() / 10);
  const auto rec = build_record(raw);
  EXPECT_EQ(rec.size(), r.size());
  EXPECT_EQ(rec.buzz[100], 1);
  EXPECT_EQ(rec.buzz[249], 1);
  EXPECT_EQ(rec.buzz[250], 0);

  put(d.file("b10.csv"), "idx,buzz\n0,0\n1,1\n2,0\n");
  const auto b = io::read_buzz_csv(d.file("b10.csv"));
  EXPECT_EQ(std::get<BuzzLabels10Hz>(b), (BuzzLabels10Hz{0, 1, 0}));
}

TEST(RawCsv, ErrorsCarryFileAndLine) {
  TempDir d;
  put(d.file("a.csv"), "idx,ax_mG,ay_mG,az_mG\n0,1,2,3\n1,1,x,3\n");
  try {
    io::read_accel_csv(d.file("a.csv"));
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("a.csv:3"), std::string::npos) << e.what();
  }
  put(d.file("b.csv"), "idx,buzz\n0,0\n1,2\n");
  EXPECT_THROW(io::read_buzz_csv(d.file("b.csv")), ValidationError);
  put(d.file("h.csv"), "time,buzz\n0,0\n");
  EXPECT_THROW(io::read_buzz_csv(d.file("h.csv")), FormatError);
  put(d.file("i.csv"), "idx,depth_m\n0,1\n2,1\n");
  EXPECT_THROW(io::read_depth_csv(d.file("i.csv")), FormatError);
  EXPECT_THROW(io::read_csv(d.file("missing.csv")), FormatError);
}

TEST(FeatureCsv, RoundTripsExactly) {
  TempDir d;
  const auto t = featurize(small_record());
  io::write_feature_csv(t, d.file("f.csv"));
  const auto back = io::read_feature_csv(d.file("f.csv"));
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_TRUE(back.rows[i] == t.rows[i]) << i;
  const auto h = io::feature_csv_header();
  EXPECT_EQ(h.size(), 2u + 26u + 4u + 1u);
  EXPECT_EQ(h.front(), "w_idx");
  EXPECT_EQ(h[h.size() - 5], "phase_surface");
  EXPECT_EQ(h.back(), "label");
}

TEST(PredictionCsv, RoundTripAndValidation) {
  TempDir d;
  const std::vector<double> p = {0.0, 0.25, 1.0};
  const std::vector<std::uint8_t> l = {0, 0, 1};
  io::write_file(d.file("p.csv"), io::format_predictions_csv(p, l));
  const auto back = io::read_predictions_csv(d.file("p.csv"));
  EXPECT_EQ(back.prob, p);
  EXPECT_EQ(back.label, l);
  put(d.file("bad.csv"), "idx,prob,label\n0,1.5,1\n");
  EXPECT_THROW(io::read_predictions_csv(d.file("bad.csv")), ValidationError);
}

TEST(Reports, UndefinedRatiosAreEmptyOrNull) {
  eval::Confusion c;
  c.tn = 3;
  eval::finish_confusion(c);
  const auto j = io::format_confusion_json(c);
  EXPECT_NE(j.find("\"precision\": null"), std::string::npos);
  EXPECT_NE(j.find("\"recall\": null"), std::string::npos);
  SweepRow row;
  row.tn = 5;
  EXPECT_EQ(io::format_sweep_csv({row}), "threshold_mGps,delay_s,tp,fp,fn,tn,precision,recall\n0,0,0,0,0,5,,\n");
}

TEST(FmtDouble, ShortestRoundTrip) {
  EXPECT_EQ(io::fmt_double(0.1), "0.1");
  EXPECT_EQ(io::fmt_double(2.0), "2");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(io::fmt_double(v)), v);
}
