#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "../oracles/fixation_oracle.hpp"
#include "genread/errors.hpp"
#include "genread/gaze.hpp"

using namespace genread;

namespace {

std::vector<GazePoint> cluster(double x, double y, int n, std::int64_t t0 = 0) {
  std::vector<GazePoint> out;
  for (int i = 0; i < n; ++i) out.push_back({t0 + static_cast<std::int64_t>(std::llround(i * 1000.0 / 90.0)), x, y, true});
  return out;
}

Fixation fix_at(double x, double y, double dur, std::int64_t t = 0) {
  Fixation f;
  f.start_t_ms = t;
  f.end_t_ms = t + static_cast<std::int64_t>(dur);
  f.duration_ms = dur;
  f.x = x;
  f.y = y;
  f.n_points = static_cast<int>(std::lround(dur * 90.0 / 1000.0));
  return f;
}

std::string csv_error(const std::string& text) {
  try {
    parse_gaze_csv(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
    return e.what();
  }
  ADD_FAILURE() << "expected a parse error";
  return "";
}

SlotLog slot(int n, ReadingCondition c, int correct, std::int64_t start, std::int64_t end) {
  SlotLog s;
  s.slot = n;
  s.story_id = "story-" + std::to_string(n);
  s.story_index = n;
  s.condition = c;
  s.correct_answers = correct;
  s.reading_start_ms = start;
  s.reading_end_ms = end;
  return s;
}

SessionLog session_log(const std::string& id, std::vector<int> correct, std::string q3, std::string q4) {
  SessionLog log;
  log.session_id = id;
  log.group_number = 1;
  for (int i = 0; i < 4; ++i) {
    log.slots.push_back(slot(i + 1, kAllConditions[i], correct[static_cast<std::size_t>(i)], i * 10000, i * 10000 + 5000));
  }
  log.post_survey = {{"Q1", "4"}, {"Q2", "4"}, {"Q3", q3}, {"Q4", q4}, {"Q5", "2"}};
  log.done = true;
  return log;
}

}  // namespace

TEST(Fixations, NineIdenticalSamplesAreOneHundredMilliseconds) {
  const auto pts = cluster(400, 300, 9);
  const auto f = detect_fixations(pts);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NEAR(f[0].duration_ms, 100.0, 1e-9);
  EXPECT_EQ(f[0].n_points, 9);
  EXPECT_DOUBLE_EQ(f[0].x, 400);
  EXPECT_DOUBLE_EQ(f[0].y, 300);
}

TEST(Fixations, EightSamplesThenJumpGiveNothing) {
  auto pts = cluster(400, 300, 8);
  auto far = cluster(1400, 900, 1, 100);
  pts.insert(pts.end(), far.begin(), far.end());
  EXPECT_TRUE(detect_fixations(pts).empty());
}

TEST(Fixations, SlowDriftExtendsTheFixation) {
  std::vector<GazePoint> pts;
  for (int i = 0; i < 14; ++i) pts.push_back({i * 11, 500.0 + 5.0 * i, 400.0, true});
  const auto f = detect_fixations(pts);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].n_points, 14);
  EXPECT_NEAR(f[0].duration_ms, 14000.0 / 90.0, 1e-9);
  EXPECT_NEAR(f[0].x, 532.5, 1e-9);
}

TEST(Fixations, ExtensionBoundaryIsInclusive) {
  auto pts = cluster(0, 0, 9);
  pts.push_back({110, 80.0, 0.0, true});   // exactly 80 px from the centroid: joins
  pts.push_back({121, 100.0, 0.0, true});  // 92 px from the new centroid (8, 0): rejected
  const auto f = detect_fixations(pts);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].n_points, 10);
}

TEST(Fixations, InvalidSampleSplitsRuns) {
  auto pts = cluster(200, 200, 12);
  pts[5].valid = false;
  EXPECT_TRUE(detect_fixations(pts).empty());
  auto longer = cluster(200, 200, 20);
  longer[9].valid = false;
  const auto f = detect_fixations(longer);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].n_points, 9);
  EXPECT_EQ(f[1].n_points, 10);
}

TEST(Fixations, AgreeWithBruteForceReference) {
  const FixationParams params;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto pts = oracle::random_walk_stream(seed);
    const auto got = detect_fixations(pts, params);
    const auto want = oracle::reference_fixations(pts, params);
    ASSERT_EQ(got.size(), want.size()) << "seed " << seed;
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(got[i].start_t_ms, pts[want[i].first].t_ms);
      EXPECT_EQ(got[i].end_t_ms, pts[want[i].last].t_ms);
      EXPECT_NEAR(got[i].x, want[i].x, 1e-9);
      EXPECT_NEAR(got[i].y, want[i].y, 1e-9);
      EXPECT_NEAR(got[i].duration_ms, want[i].duration_ms, 1e-9);
    }
  }
}

TEST(Fixations, TranslationInvariant) {
  for (std::uint64_t seed = 300; seed < 320; ++seed) {
    const auto pts = oracle::random_walk_stream(seed);
    auto shifted = pts;
    for (auto& p : shifted) {
      p.x_px += 64.0;
      p.y_px -= 32.0;
    }
    const auto a = detect_fixations(pts);
    const auto b = detect_fixations(shifted);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].n_points, b[i].n_points);
      EXPECT_NEAR(a[i].x + 64.0, b[i].x, 1e-6);
    }
  }
}

TEST(Fixations, ParamsValidated) {
  FixationParams p;
  p.min_points = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.extend_dispersion_px = 10;  // tighter than the opening threshold
  EXPECT_THROW(p.validate(), Error);
}

TEST(Aoi, ClassificationAndBorders) {
  const auto layouts = default_layouts();
  const ScreenSize screen;
  EXPECT_EQ(classify_fixation(fix_at(960, 540, 100), layouts.at(ReadingCondition::C1), screen), "document");
  EXPECT_EQ(classify_fixation(fix_at(100, 540, 100), layouts.at(ReadingCondition::C1), screen), kOffAoi);
  // x = 0.55 * 1920 sits on the shared border; the first rectangle wins
  EXPECT_EQ(classify_fixation(fix_at(1056, 540, 100), layouts.at(ReadingCondition::C2), screen), "document");
  EXPECT_EQ(classify_fixation(fix_at(1057, 540, 100), layouts.at(ReadingCondition::C2), screen), "image");
  EXPECT_EQ(classify_fixation(fix_at(960, 100, 100), layouts.at(ReadingCondition::C3), screen), "text_summary");
  EXPECT_EQ(classify_fixation(fix_at(960, 100, 100), layouts.at(ReadingCondition::C4), screen), "image_summary");
  EXPECT_EQ(classify_fixation(fix_at(960, 900, 100), layouts.at(ReadingCondition::C4), screen), "document");
  EXPECT_EQ(classify_fixation(fix_at(-5, 900, 100), layouts.at(ReadingCondition::C4), screen), kOffAoi);
}

TEST(Aoi, RatiosSumToOne) {
  const auto layout = default_layouts().at(ReadingCondition::C2);
  const std::vector<Fixation> f = {fix_at(300, 500, 200), fix_at(1500, 500, 100), fix_at(400, 200, 100),
                                   fix_at(3000, 200, 400)};
  const auto r = aoi_ratio(f, layout, {});
  EXPECT_FALSE(r.zero_total);
  EXPECT_DOUBLE_EQ(r.total_duration_ms, 800);
  EXPECT_DOUBLE_EQ(r.ratio("document"), 300.0 / 800.0);
  EXPECT_DOUBLE_EQ(r.ratio("image"), 100.0 / 800.0);
  EXPECT_DOUBLE_EQ(r.ratio(kOffAoi), 0.5);
  ASSERT_EQ(r.buckets.size(), 3u);
  EXPECT_EQ(r.buckets.back().name, kOffAoi);
  double s = 0;
  for (const auto& b : r.buckets) s += b.ratio;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Aoi, EmptyInputFlagsZeroTotal) {
  const auto r = aoi_ratio({}, default_layouts().at(ReadingCondition::C1), {});
  EXPECT_TRUE(r.zero_total);
  EXPECT_EQ(r.ratio("document"), 0.0);
}

TEST(Aoi, LayoutValidation) {
  AoiLayout l;
  l.rects = {{"a", 0.5, 0, 0.4, 1}};
  EXPECT_THROW(l.validate(), Error);
  l.rects = {{"a", 0, 0, 1, 1}, {"a", 0, 0, 1, 1}};
  EXPECT_THROW(l.validate(), Error);
  l.rects = {{"off_aoi", 0, 0, 1, 1}};
  EXPECT_THROW(l.validate(), Error);
}

TEST(Aoi, ShippedConfigMatchesDefaults) {
  const auto from_file = layouts_from_config(Config::load(GENREAD_CONFIG_DIR "/genread.conf"));
  const auto defaults = default_layouts();
  ASSERT_EQ(from_file.size(), defaults.size());
  for (const auto& [c, l] : defaults) {
    const auto& f = from_file.at(c);
    ASSERT_EQ(f.rects.size(), l.rects.size());
    for (std::size_t i = 0; i < l.rects.size(); ++i) {
      EXPECT_EQ(f.rects[i].name, l.rects[i].name);
      EXPECT_DOUBLE_EQ(f.rects[i].x0, l.rects[i].x0);
      EXPECT_DOUBLE_EQ(f.rects[i].y0, l.rects[i].y0);
      EXPECT_DOUBLE_EQ(f.rects[i].x1, l.rects[i].x1);
      EXPECT_DOUBLE_EQ(f.rects[i].y1, l.rects[i].y1);
    }
  }
}

TEST(Aoi, ConfigLayoutOverridesOneCondition) {
  const auto c = Config::parse("[layout.C1]\nleft = 0, 0, 0.5, 1\nright = 0.5, 0, 1, 1\n");
  const auto l = layouts_from_config(c);
  ASSERT_EQ(l.at(ReadingCondition::C1).rects.size(), 2u);
  EXPECT_EQ(l.at(ReadingCondition::C2).rects[1].name, "image");
  EXPECT_THROW(layouts_from_config(Config::parse("[layout.C1]\nx = 0, 0, 1\n")), Error);
}

TEST(ScanPathTest, NodesAndEdges) {
  const std::vector<Fixation> f = {fix_at(1, 2, 100, 0), fix_at(3, 4, 200, 300), fix_at(5, 6, 100, 700)};
  const auto p = scan_path(f);
  EXPECT_EQ(p.nodes.size(), 3u);
  EXPECT_EQ(p.edge_count(), 2u);
  const auto j = p.to_json();
  EXPECT_EQ(j["nodes"].size(), 3u);
  EXPECT_EQ(j["edges"].size(), 2u);
  EXPECT_NE(p.to_svg({}).find("<svg"), std::string::npos);
  EXPECT_EQ(scan_path({}).edge_count(), 0u);
}

TEST(Heatmap, ConservesDurationAndClampsEdges) {
  const std::vector<Fixation> f = {fix_at(0, 0, 100), fix_at(1919.9, 1079.9, 200), fix_at(-50, 5000, 300),
                                   fix_at(960, 540, 400)};
  const auto h = heatmap(f, 64, 36, {});
  EXPECT_DOUBLE_EQ(h.total(), 1000.0);
  EXPECT_DOUBLE_EQ(h.at(0, 0), 100.0);
  EXPECT_DOUBLE_EQ(h.at(63, 35), 200.0);
  EXPECT_DOUBLE_EQ(h.at(0, 35), 300.0);
  EXPECT_DOUBLE_EQ(h.at(32, 18), 400.0);
  const auto csv = h.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 36);
}

TEST(Heatmap, ConservationOnRandomStreams) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto fx = detect_fixations(oracle::random_walk_stream(seed));
    double total = 0;
    for (const auto& x : fx) total += x.duration_ms;
    EXPECT_NEAR(heatmap(fx, 64, 36, {}).total(), total, 1e-9);
  }
}

TEST(GazeCsv, ParsesRows) {
  const auto pts = parse_gaze_csv("t_ms,x_px,y_px,valid\n0,10.5,20,1\n11,11,21,0\n22,12,22,true\n");
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_DOUBLE_EQ(pts[0].x_px, 10.5);
  EXPECT_FALSE(pts[1].valid);
  EXPECT_TRUE(pts[2].valid);
}

TEST(GazeCsv, ErrorsNameTheLine) {
  EXPECT_NE(csv_error("time,x,y,v\n").find("line 1"), std::string::npos);
  EXPECT_NE(csv_error("t_ms,x_px,y_px,valid\n0,1,2,maybe\n").find("line 2"), std::string::npos);
  EXPECT_NE(csv_error("t_ms,x_px,y_px,valid\n0,1,2,1\n5,1,abc,1\n").find("line 3"), std::string::npos);
  EXPECT_NE(csv_error("t_ms,x_px,y_px,valid\n10,1,2,1\n5,1,2,1\n").find("line 3"), std::string::npos);
  EXPECT_NE(csv_error("t_ms,x_px,y_px,valid\n0,1,2\n").find("line 2"), std::string::npos);
}

TEST(Session, GazeIsSplitByReadingWindows) {
  const auto log = session_log("s", {6, 7, 8, 9}, "", "");
  std::vector<GazePoint> gaze;
  // a fixation inside each reading window, plus one in the gap after slot 1
  const double xs[] = {960, 300, 960, 960};
  const double ys[] = {540, 540, 100, 100};
  for (int i = 0; i < 4; ++i) {
    auto c = cluster(xs[i], ys[i], 18, i * 10000 + 1000);
    gaze.insert(gaze.end(), c.begin(), c.end());
    if (i == 0) {
      auto gap = cluster(960, 540, 18, 7000);
      gaze.insert(gaze.end(), gap.begin(), gap.end());
    }
  }
  const auto a = analyze_session(log, gaze, {});
  ASSERT_EQ(a.slots.size(), 4u);
  EXPECT_EQ(a.slots[0].fixations.size(), 1u);
  EXPECT_DOUBLE_EQ(a.slots[0].ratios.ratio("document"), 1.0);
  EXPECT_DOUBLE_EQ(a.slots[1].ratios.ratio("document"), 1.0);
  EXPECT_DOUBLE_EQ(a.slots[2].ratios.ratio("text_summary"), 1.0);
  EXPECT_DOUBLE_EQ(a.slots[3].ratios.ratio("image_summary"), 1.0);
  EXPECT_EQ(a.slots[3].condition, ReadingCondition::C4);
  EXPECT_DOUBLE_EQ(a.slots[0].heat.total(), 200.0);
  const auto csv = aoi_ratio_csv(a);
  EXPECT_EQ(csv.rfind("session_id,slot,condition,aoi,duration_ms,ratio\n", 0), 0u);
}

TEST(Preference, GroupsFromPostSurvey) {
  EXPECT_EQ(preference_group(session_log("a", {0, 0, 0, 0}, "text-generation", "")), "text-generation");
  EXPECT_EQ(preference_group(session_log("a", {0, 0, 0, 0}, "TGenAI", "C3")), "text-generation");
  EXPECT_EQ(preference_group(session_log("a", {0, 0, 0, 0}, "", "image-generation")), "image-generation");
  EXPECT_EQ(preference_group(session_log("a", {0, 0, 0, 0}, "C2", "igenai")), "image-generation");
  EXPECT_EQ(preference_group(session_log("a", {0, 0, 0, 0}, "C3", "C4")), "mixed");
  EXPECT_EQ(preference_group(session_log("a", {0, 0, 0, 0}, "4", "")), "unspecified");
}

TEST(Report, MeansPerConditionAndGroup) {
  std::vector<SessionAnalysis> sessions;
  sessions.push_back({session_log("a", {6, 7, 8, 9}, "text-generation", ""), {}});
  sessions.push_back({session_log("b", {8, 9, 10, 5}, "image-generation", ""), {}});
  const auto rows = condition_report(sessions);
  auto find = [&](const std::string& g, ReadingCondition c) -> const ConditionAggregate* {
    for (const auto& r : rows) {
      if (r.group == g && r.condition == c) return &r;
    }
    return nullptr;
  };
  const auto* all_c1 = find("all", ReadingCondition::C1);
  ASSERT_NE(all_c1, nullptr);
  EXPECT_EQ(all_c1->n_sessions, 2);
  EXPECT_DOUBLE_EQ(all_c1->mean_correct, 7.0);
  EXPECT_NEAR(all_c1->stddev_correct, std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(find("all", ReadingCondition::C4)->mean_correct, 7.0);
  EXPECT_DOUBLE_EQ(find("all", ReadingCondition::C3)->mean_correct, 9.0);
  const auto* t2 = find("text-generation", ReadingCondition::C2);
  ASSERT_NE(t2, nullptr);
  EXPECT_EQ(t2->n_sessions, 1);
  EXPECT_DOUBLE_EQ(t2->mean_correct, 7.0);
  EXPECT_DOUBLE_EQ(t2->stddev_correct, 0.0);
  EXPECT_DOUBLE_EQ(find("image-generation", ReadingCondition::C2)->mean_correct, 9.0);
  EXPECT_EQ(find("mixed", ReadingCondition::C1), nullptr);

  const auto csv = condition_report_csv(rows);
  EXPECT_EQ(csv.rfind("group,condition,label,n_sessions,mean_correct,stddev_correct,n_gaze,", 0), 0u);
}
