#pragma once

#include <cstdint>
#include <map>
#include <json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genread/config.hpp"
#include "genread/experiment.hpp"

namespace genread {

struct GazePoint {
  std::int64_t t_ms = 0;
  double x_px = 0.0;
  double y_px = 0.0;
  bool valid = true;
};

// Dispersion-threshold parameters. Defaults: nine samples at 90 Hz open a
// fixation (100 ms) when all lie within 50 px of their centroid; later
// samples join while within 80 px of the running centroid.
struct FixationParams {
  int min_points = 9;
  double init_dispersion_px = 50.0;
  double extend_dispersion_px = 80.0;
  double sample_rate_hz = 90.0;

  void validate() const;
  double min_duration_ms() const { return 1000.0 * min_points / sample_rate_hz; }
};

struct Fixation {
  std::int64_t start_t_ms = 0;
  std::int64_t end_t_ms = 0;  // timestamp of the last sample
  double duration_ms = 0.0;   // 1000 * n_points / sample_rate_hz
  double x = 0.0;             // centroid
  double y = 0.0;
  int n_points = 0;

  // Timestamp-based span, exported for diagnostics only.
  std::int64_t timestamp_span_ms() const { return end_t_ms - start_t_ms; }
};

// Invalid samples split the stream; no window or fixation spans one.
std::vector<Fixation> detect_fixations(std::span<const GazePoint> points, const FixationParams& params = {});

struct ScreenSize {
  double width_px = 1920.0;
  double height_px = 1080.0;
};

// Rectangle in normalized [0,1]^2 screen coordinates, borders inclusive.
struct AoiRect {
  std::string name;
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  bool contains(double nx, double ny) const { return nx >= x0 && nx <= x1 && ny >= y0 && ny <= y1; }
};

struct AoiLayout {
  ReadingCondition condition = ReadingCondition::C1;
  std::vector<AoiRect> rects;  // declaration order decides border ties

  void validate() const;
};

inline constexpr std::string_view kOffAoi = "off_aoi";

using LayoutMap = std::map<ReadingCondition, AoiLayout>;

LayoutMap default_layouts();

// Reads [layout.C1] .. [layout.C4] sections ("name = x0, y0, x1, y1");
// conditions without a section keep their default layout.
LayoutMap layouts_from_config(const Config& config);

std::string classify_fixation(const Fixation& f, const AoiLayout& layout, ScreenSize screen);

struct AoiBucket {
  std::string name;
  double duration_ms = 0.0;
  double ratio = 0.0;
};

struct AoiRatioReport {
  std::vector<AoiBucket> buckets;  // layout order, off_aoi last
  double total_duration_ms = 0.0;
  bool zero_total = true;

  double ratio(std::string_view name) const;
};

AoiRatioReport aoi_ratio(std::span<const Fixation> fixations, const AoiLayout& layout, ScreenSize screen);

struct ScanPathNode {
  double x = 0.0;
  double y = 0.0;
  double duration_ms = 0.0;
  std::int64_t start_t_ms = 0;
};

struct ScanPath {
  std::vector<ScanPathNode> nodes;

  std::size_t edge_count() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  nlohmann::json to_json() const;
  std::string to_svg(ScreenSize screen) const;
};

ScanPath scan_path(std::span<const Fixation> fixations);

struct HeatmapGrid {
  int width = 0;
  int height = 0;
  std::vector<double> cells;  // row-major, height rows of width cells

  double at(int col, int row) const { return cells[static_cast<std::size_t>(row * width + col)]; }
  double total() const;
  std::string to_csv() const;
};

inline constexpr int kHeatmapWidth = 64;
inline constexpr int kHeatmapHeight = 36;

// Each fixation deposits its full duration in the cell under its centroid;
// centroids off screen land in the nearest edge cell.
HeatmapGrid heatmap(std::span<const Fixation> fixations, int grid_w, int grid_h, ScreenSize screen);

// CSV with header `t_ms,x_px,y_px,valid`. Errors name the offending line.
std::vector<GazePoint> parse_gaze_csv(std::string_view text);

nlohmann::json fixations_to_json(std::span<const Fixation> fixations);

// --- per-session analysis ----------------------------------------------------

struct AnalysisSettings {
  FixationParams fixation;
  LayoutMap layouts = default_layouts();
  ScreenSize screen;
  int grid_w = kHeatmapWidth;
  int grid_h = kHeatmapHeight;

  static AnalysisSettings from_config(const Config& config);
};

struct SlotGaze {
  int slot = 0;
  ReadingCondition condition = ReadingCondition::C1;
  std::vector<Fixation> fixations;
  AoiRatioReport ratios;
  ScanPath path;
  HeatmapGrid heat;
};

struct SessionAnalysis {
  SessionLog log;
  std::vector<SlotGaze> slots;  // one per completed reading phase
};

// Splits the gaze stream by the reading windows [start, end) recorded in the
// log, then runs detection and AOI attribution with each slot's layout.
SessionAnalysis analyze_session(const SessionLog& log, std::span<const GazePoint> gaze, const AnalysisSettings& settings);

// --- condition-level aggregation -----------------------------------------------

// "text-generation" / "image-generation" from post-survey Q3 and Q4; "mixed"
// when they disagree and "unspecified" when neither names a medium.
std::string preference_group(const SessionLog& log);

struct ConditionAggregate {
  std::string group;  // "all" or a preference group
  ReadingCondition condition = ReadingCondition::C1;
  int n_sessions = 0;
  double mean_correct = 0.0;
  double stddev_correct = 0.0;  // sample standard deviation, 0 for n < 2
  int n_gaze = 0;
  std::map<std::string, double> mean_ratio;
};

std::vector<ConditionAggregate> condition_report(const std::vector<SessionAnalysis>& sessions);
std::string condition_report_csv(const std::vector<ConditionAggregate>& rows);
std::string aoi_ratio_csv(const SessionAnalysis& analysis);

}  // namespace genread
