#include "genread/gaze.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {

void FixationParams::validate() const {
  require(min_points >= 2, "fixation min_points must be at least 2");
  require(init_dispersion_px > 0.0, "init_dispersion_px must be positive");
  require(extend_dispersion_px >= init_dispersion_px, "extend_dispersion_px must be >= init_dispersion_px");
  require(sample_rate_hz > 0.0 && std::isfinite(sample_rate_hz), "sample_rate_hz must be positive");
}

namespace {

// Closes runs of valid samples; each run is windowed on its own.
void detect_in_run(std::span<const GazePoint> run, const FixationParams& p, std::vector<Fixation>& out) {
  const std::size_t n = run.size();
  const std::size_t k = static_cast<std::size_t>(p.min_points);
  std::size_t i = 0;
  while (i + k <= n) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t j = i; j < i + k; ++j) {
      sx += run[j].x_px;
      sy += run[j].y_px;
    }
    const double cx = sx / static_cast<double>(k);
    const double cy = sy / static_cast<double>(k);
    bool opens = true;
    for (std::size_t j = i; j < i + k; ++j) {
      if (std::hypot(run[j].x_px - cx, run[j].y_px - cy) > p.init_dispersion_px) {
        opens = false;
        break;
      }
    }
    if (!opens) {
      ++i;
      continue;
    }

    std::size_t end = i + k;
    while (end < n) {
      const double m = static_cast<double>(end - i);
      if (std::hypot(run[end].x_px - sx / m, run[end].y_px - sy / m) > p.extend_dispersion_px) break;
      sx += run[end].x_px;
      sy += run[end].y_px;
      ++end;
    }

    const auto count = end - i;
    Fixation f;
    f.start_t_ms = run[i].t_ms;
    f.end_t_ms = run[end - 1].t_ms;
    f.n_points = static_cast<int>(count);
    f.duration_ms = 1000.0 * static_cast<double>(count) / p.sample_rate_hz;
    f.x = sx / static_cast<double>(count);
    f.y = sy / static_cast<double>(count);
    out.push_back(f);
    i = end;
  }
}

}  // namespace

std::vector<Fixation> detect_fixations(std::span<const GazePoint> points, const FixationParams& params) {
  params.validate();
  std::vector<Fixation> out;
  std::size_t start = 0;
  while (start < points.size()) {
    while (start < points.size() && !points[start].valid) ++start;
    std::size_t stop = start;
    while (stop < points.size() && points[stop].valid) ++stop;
    if (stop > start) detect_in_run(points.subspan(start, stop - start), params, out);
    start = stop;
  }
  return out;
}

// --- AOIs ---------------------------------------------------------------------

void AoiLayout::validate() const {
  std::set<std::string> names;
  for (const auto& r : rects) {
    if (r.name.empty() || r.name == kOffAoi) {
      fail(ErrorCode::ValidationFailed, "AOI name '" + r.name + "' is reserved or empty");
    }
    if (!names.insert(r.name).second) {
      fail(ErrorCode::ValidationFailed, "duplicate AOI '" + r.name + "' in layout " + std::string(to_string(condition)));
    }
    const bool inside = r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= 1.0 && r.y1 <= 1.0 && r.x0 < r.x1 && r.y0 < r.y1;
    if (!inside) {
      fail(ErrorCode::ValidationFailed, "AOI '" + r.name + "' is not a rectangle inside the unit square");
    }
  }
}

LayoutMap default_layouts() {
  LayoutMap m;
  m[ReadingCondition::C1] = {ReadingCondition::C1, {{"document", 0.2, 0.0, 0.8, 1.0}}};
  m[ReadingCondition::C2] = {ReadingCondition::C2,
                             {{"document", 0.0, 0.0, 0.55, 1.0}, {"image", 0.55, 0.0, 1.0, 1.0}}};
  m[ReadingCondition::C3] = {ReadingCondition::C3,
                             {{"text_summary", 0.0, 0.0, 1.0, 0.3}, {"document", 0.0, 0.3, 1.0, 1.0}}};
  m[ReadingCondition::C4] = {ReadingCondition::C4,
                             {{"image_summary", 0.0, 0.0, 1.0, 0.3}, {"document", 0.0, 0.3, 1.0, 1.0}}};
  return m;
}

namespace {

double parse_number(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(ErrorCode::MalformedInput, what + ": expected a number, got '" + s + "'");
  }
  return v;
}

}  // namespace

LayoutMap layouts_from_config(const Config& config) {
  auto layouts = default_layouts();
  const auto sections = config.sections();
  for (auto c : kAllConditions) {
    const std::string name = "layout." + std::string(to_string(c));
    if (std::find(sections.begin(), sections.end(), name) == sections.end()) continue;
    AoiLayout layout{c, {}};
    for (const auto& [key, value] : config.entries(name)) {
      const auto parts = split_list(value);
      const std::string where = "[" + name + "] " + key;
      if (parts.size() != 4) fail(ErrorCode::MalformedInput, where + ": expected x0, y0, x1, y1");
      layout.rects.push_back({key, parse_number(parts[0], where), parse_number(parts[1], where),
                              parse_number(parts[2], where), parse_number(parts[3], where)});
    }
    layout.validate();
    layouts[c] = std::move(layout);
  }
  return layouts;
}

std::string classify_fixation(const Fixation& f, const AoiLayout& layout, ScreenSize screen) {
  const double nx = f.x / screen.width_px;
  const double ny = f.y / screen.height_px;
  for (const auto& r : layout.rects) {
    if (r.contains(nx, ny)) return r.name;
  }
  return std::string(kOffAoi);
}

double AoiRatioReport::ratio(std::string_view name) const {
  for (const auto& b : buckets) {
    if (b.name == name) return b.ratio;
  }
  return 0.0;
}

AoiRatioReport aoi_ratio(std::span<const Fixation> fixations, const AoiLayout& layout, ScreenSize screen) {
  AoiRatioReport rep;
  for (const auto& r : layout.rects) rep.buckets.push_back({r.name, 0.0, 0.0});
  rep.buckets.push_back({std::string(kOffAoi), 0.0, 0.0});
  for (const auto& f : fixations) {
    const auto name = classify_fixation(f, layout, screen);
    for (auto& b : rep.buckets) {
      if (b.name == name) {
        b.duration_ms += f.duration_ms;
        break;
      }
    }
    rep.total_duration_ms += f.duration_ms;
  }
  rep.zero_total = !(rep.total_duration_ms > 0.0);
  if (!rep.zero_total) {
    for (auto& b : rep.buckets) b.ratio = b.duration_ms / rep.total_duration_ms;
  }
  return rep;
}

// --- scan path -----------------------------------------------------------------

ScanPath scan_path(std::span<const Fixation> fixations) {
  ScanPath path;
  path.nodes.reserve(fixations.size());
  for (const auto& f : fixations) path.nodes.push_back({f.x, f.y, f.duration_ms, f.start_t_ms});
  return path;
}

nlohmann::json ScanPath::to_json() const {
  nlohmann::json nodes_j = nlohmann::json::array();
  for (const auto& n : nodes) {
    nodes_j.push_back({{"x", n.x}, {"y", n.y}, {"duration_ms", n.duration_ms}, {"start_t_ms", n.start_t_ms}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 1; i < nodes.size(); ++i) edges.push_back({{"from", i - 1}, {"to", i}});
  return {{"nodes", nodes_j}, {"edges", edges}};
}

std::string ScanPath::to_svg(ScreenSize screen) const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << screen.width_px << "\" height=\"" << screen.height_px
     << "\" viewBox=\"0 0 " << screen.width_px << ' ' << screen.height_px << "\">\n";
  if (nodes.size() > 1) {
    os << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < nodes.size(); ++i) os << (i ? " " : "") << nodes[i].x << ',' << nodes[i].y;
    os << "\"/>\n";
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    // radius grows with the square root of dwell so area tracks duration
    const double r = 4.0 * std::sqrt(nodes[i].duration_ms / 100.0);
    os << "  <circle cx=\"" << nodes[i].x << "\" cy=\"" << nodes[i].y << "\" r=\"" << r
       << "\" fill=\"#ff7f0e\" fill-opacity=\"0.5\"/>\n";
    os << "  <text x=\"" << nodes[i].x << "\" y=\"" << nodes[i].y << "\" font-size=\"12\">" << (i + 1) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// --- heatmap -----------------------------------------------------------------

double HeatmapGrid::total() const {
  double s = 0.0;
  for (double c : cells) s += c;
  return s;
}

std::string HeatmapGrid::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      if (col) os << ',';
      os << at(col, row);
    }
    os << '\n';
  }
  return os.str();
}

HeatmapGrid heatmap(std::span<const Fixation> fixations, int grid_w, int grid_h, ScreenSize screen) {
  require(grid_w > 0 && grid_h > 0, "heatmap grid must have positive dimensions");
  require(screen.width_px > 0 && screen.height_px > 0, "screen size must be positive");
  HeatmapGrid g;
  g.width = grid_w;
  g.height = grid_h;
  g.cells.assign(static_cast<std::size_t>(grid_w) * static_cast<std::size_t>(grid_h), 0.0);
  for (const auto& f : fixations) {
    auto cell = [](double v, double extent, int cells) {
      const double scaled = std::floor(v / extent * cells);
      if (!(scaled >= 0.0)) return 0;
      return static_cast<int>(std::min<double>(scaled, cells - 1));
    };
    const int col = cell(f.x, screen.width_px, grid_w);
    const int row = cell(f.y, screen.height_px, grid_h);
    g.cells[static_cast<std::size_t>(row * grid_w + col)] += f.duration_ms;
  }
  return g;
}

// --- gaze CSV ------------------------------------------------------------------

std::vector<GazePoint> parse_gaze_csv(std::string_view text) {
  std::vector<GazePoint> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  auto error = [&](const std::string& msg) {
    fail(ErrorCode::MalformedInput, "gaze csv line " + std::to_string(lineno) + ": " + msg);
  };
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++lineno;
    if (line.empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
      }
      if (compact != "t_ms,x_px,y_px,valid") error("expected header 't_ms,x_px,y_px,valid'");
      header_seen = true;
      continue;
    }
    const auto fields = split_list(line);
    if (fields.size() != 4 || std::count(line.begin(), line.end(), ',') != 3) error("expected 4 fields");

    GazePoint p;
    {
      const auto& f = fields[0];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), p.t_ms);
      if (ec != std::errc() || ptr != f.data() + f.size()) error("bad t_ms '" + f + "'");
    }
    const auto& v = fields[3];
    if (v == "1" || v == "true") {
      p.valid = true;
    } else if (v == "0" || v == "false") {
      p.valid = false;
    } else {
      error("bad valid flag '" + v + "'");
    }
    auto coord = [&](const std::string& f, const char* name) {
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), d);
      if (ec != std::errc() || ptr != f.data() + f.size()) error(std::string("bad ") + name + " '" + f + "'");
      return d;
    };
    if (p.valid) {
      p.x_px = coord(fields[1], "x_px");
      p.y_px = coord(fields[2], "y_px");
      if (!std::isfinite(p.x_px) || !std::isfinite(p.y_px)) error("non-finite coordinate");
    }
    if (!out.empty() && p.t_ms < out.back().t_ms) error("t_ms decreases");
    out.push_back(p);
  }
  if (!header_seen) fail(ErrorCode::MalformedInput, "gaze csv is empty (missing header)");
  return out;
}

nlohmann::json fixations_to_json(std::span<const Fixation> fixations) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : fixations) {
    arr.push_back({{"start_t_ms", f.start_t_ms},
                   {"end_t_ms", f.end_t_ms},
                   {"duration_ms", f.duration_ms},
                   {"timestamp_span_ms", f.timestamp_span_ms()},
                   {"x", f.x},
                   {"y", f.y},
                   {"n_points", f.n_points}});
  }
  return arr;
}

// --- session analysis -------------------------------------------------------------

AnalysisSettings AnalysisSettings::from_config(const Config& config) {
  AnalysisSettings s;
  s.fixation.min_points = static_cast<int>(config.get_int("fixation", "min_points", s.fixation.min_points));
  s.fixation.init_dispersion_px = config.get_double("fixation", "init_dispersion_px", s.fixation.init_dispersion_px);
  s.fixation.extend_dispersion_px =
      config.get_double("fixation", "extend_dispersion_px", s.fixation.extend_dispersion_px);
  s.fixation.sample_rate_hz = config.get_double("fixation", "sample_rate_hz", s.fixation.sample_rate_hz);
  s.fixation.validate();
  s.layouts = layouts_from_config(config);
  s.screen.width_px = config.get_double("screen", "width_px", s.screen.width_px);
  s.screen.height_px = config.get_double("screen", "height_px", s.screen.height_px);
  s.grid_w = static_cast<int>(config.get_int("heatmap", "grid_w", s.grid_w));
  s.grid_h = static_cast<int>(config.get_int("heatmap", "grid_h", s.grid_h));
  require(s.screen.width_px > 0 && s.screen.height_px > 0, "screen size must be positive");
  require(s.grid_w > 0 && s.grid_h > 0, "heatmap grid must have positive dimensions");
  return s;
}

SessionAnalysis analyze_session(const SessionLog& log, std::span<const GazePoint> gaze, const AnalysisSettings& settings) {
  SessionAnalysis a;
  a.log = log;
  for (const auto& slot : log.slots) {
    if (slot.reading_end_ms <= slot.reading_start_ms) continue;
    const auto lo = std::lower_bound(gaze.begin(), gaze.end(), slot.reading_start_ms,
                                     [](const GazePoint& p, std::int64_t t) { return p.t_ms < t; });
    const auto hi = std::lower_bound(lo, gaze.end(), slot.reading_end_ms,
                                     [](const GazePoint& p, std::int64_t t) { return p.t_ms < t; });
    SlotGaze sg;
    sg.slot = slot.slot;
    sg.condition = slot.condition;
    sg.fixations = detect_fixations(std::span<const GazePoint>(lo, hi), settings.fixation);
    const auto it = settings.layouts.find(slot.condition);
    require(it != settings.layouts.end(), "no AOI layout for " + std::string(to_string(slot.condition)));
    sg.ratios = aoi_ratio(sg.fixations, it->second, settings.screen);
    sg.path = scan_path(sg.fixations);
    sg.heat = heatmap(sg.fixations, settings.grid_w, settings.grid_h, settings.screen);
    a.slots.push_back(std::move(sg));
  }
  return a;
}

// --- aggregation -----------------------------------------------------------------

namespace {

enum class Medium { None, Text, Image };

Medium medium_of(const std::string& answer) {
  std::string a;
  for (char c : trim(answer)) a.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (a == "text-generation" || a == "tgenai" || a == "c3") return Medium::Text;
  if (a == "image-generation" || a == "igenai" || a == "c2" || a == "c4") return Medium::Image;
  return Medium::None;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

std::string preference_group(const SessionLog& log) {
  auto lookup = [&](const char* key) {
    const auto it = log.post_survey.find(key);
    return it == log.post_survey.end() ? Medium::None : medium_of(it->second);
  };
  const Medium q3 = lookup("Q3");
  const Medium q4 = lookup("Q4");
  Medium m = Medium::None;
  if (q3 != Medium::None && q4 != Medium::None) {
    if (q3 != q4) return "mixed";
    m = q3;
  } else {
    m = q3 != Medium::None ? q3 : q4;
  }
  switch (m) {
    case Medium::Text:
      return "text-generation";
    case Medium::Image:
      return "image-generation";
    case Medium::None:
      break;
  }
  return "unspecified";
}

std::vector<ConditionAggregate> condition_report(const std::vector<SessionAnalysis>& sessions) {
  struct Acc {
    std::vector<double> correct;
    int n_gaze = 0;
    std::map<std::string, double> ratio_sum;
  };
  // group -> condition -> accumulator; std::map keeps output order stable
  std::map<std::string, std::map<ReadingCondition, Acc>> acc;

  for (const auto& s : sessions) {
    const std::string groups[] = {"all", preference_group(s.log)};
    for (const auto& g : groups) {
      for (const auto& slot : s.log.slots) acc[g][slot.condition].correct.push_back(slot.correct_answers);
      for (const auto& sg : s.slots) {
        if (sg.ratios.zero_total) continue;
        auto& a = acc[g][sg.condition];
        ++a.n_gaze;
        for (const auto& b : sg.ratios.buckets) a.ratio_sum[b.name] += b.ratio;
      }
    }
  }

  std::vector<ConditionAggregate> rows;
  auto emit = [&](const std::string& g) {
    const auto it = acc.find(g);
    if (it == acc.end()) return;
    for (const auto& [cond, a] : it->second) {
      ConditionAggregate r;
      r.group = g;
      r.condition = cond;
      r.n_sessions = static_cast<int>(a.correct.size());
      if (!a.correct.empty()) {
        double sum = 0.0;
        for (double v : a.correct) sum += v;
        r.mean_correct = sum / static_cast<double>(a.correct.size());
        if (a.correct.size() > 1) {
          double ss = 0.0;
          for (double v : a.correct) ss += (v - r.mean_correct) * (v - r.mean_correct);
          r.stddev_correct = std::sqrt(ss / static_cast<double>(a.correct.size() - 1));
        }
      }
      r.n_gaze = a.n_gaze;
      for (const auto& [name, sum] : a.ratio_sum) r.mean_ratio[name] = sum / a.n_gaze;
      rows.push_back(std::move(r));
    }
  };
  emit("all");
  for (const auto& [g, _] : acc) {
    if (g != "all") emit(g);
  }
  return rows;
}

std::string condition_report_csv(const std::vector<ConditionAggregate>& rows) {
  std::vector<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [name, _] : r.mean_ratio) {
      if (name != kOffAoi && std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  std::sort(names.begin(), names.end());
  names.emplace_back(kOffAoi);

  std::ostringstream os;
  os << "group,condition,label,n_sessions,mean_correct,stddev_correct,n_gaze";
  for (const auto& n : names) os << ",ratio_" << n;
  os << '\n';
  for (const auto& r : rows) {
    os << r.group << ',' << to_string(r.condition) << ',' << condition_label(r.condition) << ',' << r.n_sessions << ','
       << fmt(r.mean_correct) << ',' << fmt(r.stddev_correct) << ',' << r.n_gaze;
    for (const auto& n : names) {
      const auto it = r.mean_ratio.find(n);
      os << ',' << (it == r.mean_ratio.end() ? std::string() : fmt(it->second));
    }
    os << '\n';
  }
  return os.str();
}

std::string aoi_ratio_csv(const SessionAnalysis& analysis) {
  std::ostringstream os;
  os << "session_id,slot,condition,aoi,duration_ms,ratio\n";
  for (const auto& sg : analysis.slots) {
    for (const auto& b : sg.ratios.buckets) {
      os << analysis.log.session_id << ',' << sg.slot << ',' << to_string(sg.condition) << ',' << b.name << ','
         << fmt(b.duration_ms) << ',' << fmt(b.ratio) << '\n';
    }
  }
  return os.str();
}

}  // namespace genread
