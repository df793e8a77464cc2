#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "genread/bundle.hpp"
#include "genread/config.hpp"
#include "genread/errors.hpp"
#include "genread/experiment.hpp"
#include "genread/gaze.hpp"
#include "genread/http_providers.hpp"
#include "genread/mock_providers.hpp"
#include "genread/server.hpp"
#include "genread/service.hpp"

namespace fs = std::filesystem;
using namespace genread;

namespace {

Config load_config(const std::string& path) {
  if (path.empty()) return Config::parse("", "<defaults>");
  return Config::load(path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << data;
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- generate-bundle ---------------------------------------------------------

struct GenerateArgs {
  bool mock = false;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string genre;
  std::string animal;
  std::string favorite_title;
  std::optional<int> story_words;
  std::optional<int> summary_words;
  std::optional<int> retries;
};

int cmd_generate_bundle(const GenerateArgs& a) {
  const auto cfg = load_config(a.config);
  auto settings = GenerationSettings::from_config(cfg);
  if (a.seed) settings.seed = *a.seed;
  if (a.story_words) settings.story_words = *a.story_words;
  if (a.summary_words) settings.summary_words = *a.summary_words;
  if (a.retries) settings.retries = *a.retries;

  PreferenceSpec prefs;
  if (!a.genre.empty()) prefs.genre = a.genre;
  if (!a.animal.empty()) prefs.animal = a.animal;
  if (!a.favorite_title.empty()) prefs.favorite_title = a.favorite_title;

  ArtifactStore store;
  std::unique_ptr<TextProvider> text;
  std::unique_ptr<ImageProvider> image;
  std::unique_ptr<EmbeddingProvider> embedder;
  const auto dims = static_cast<std::size_t>(cfg.get_int("providers", "embed_dims", kDefaultEmbeddingDims));
  const auto budget = static_cast<std::size_t>(cfg.get_int("providers", "embed_token_budget", kDefaultTokenBudget));
  if (a.mock) {
    text = std::make_unique<MockTextProvider>(MockTextOptions{settings.seed, std::nullopt});
    image = std::make_unique<MockImageProvider>(store, settings.seed);
    embedder = std::make_unique<MockEmbeddingProvider>(dims, budget, settings.seed);
  } else {
    auto endpoint = [&](const std::string& prefix, const std::string& kind, const std::string& model) {
      return ProviderEndpoint::from_env(prefix, cfg.get_string("providers", kind + "_model", model),
                                        cfg.get_string("providers", kind + "_url", ""));
    };
    text = std::make_unique<HttpTextProvider>(endpoint("GENREAD_TEXT", "text", "gpt-4o"));
    image = std::make_unique<HttpImageProvider>(endpoint("GENREAD_IMAGE", "image", "dall-e-3"), store,
                                                static_cast<int>(cfg.get_int("providers", "image_width_px", 1024)),
                                                static_cast<int>(cfg.get_int("providers", "image_height_px", 1024)));
    embedder = std::make_unique<HttpEmbeddingProvider>(endpoint("GENREAD_EMBED", "embed", "clip-vit-base-patch32"),
                                                       dims, budget);
  }

  // mock bundles carry a fixed timestamp so reruns are byte-identical
  const std::string created_at = a.mock ? "1970-01-01T00:00:00Z" : utc_now();
  const auto bundle = build_bundle(prefs, settings, {*text, *image, *embedder, store}, created_at, a.mock);
  write_bundle(bundle, a.out);
  std::cout << "bundle " << bundle.bundle_id << " written to " << a.out << ": " << bundle.story.word_count
            << " words, " << bundle.story.sentences.size() << " sentences, summary " << bundle.summary.word_count
            << " words, " << bundle.questions.questions.size() << " questions, " << bundle.selection.entries.size()
            << " summary images\n";
  return 0;
}

// --- validate-bundle ---------------------------------------------------------

int cmd_validate_bundle(const std::string& dir) {
  const auto b = load_bundle(dir);
  std::cout << "ok " << b.bundle_id << " \"" << b.story.title << "\" " << b.story.word_count << " words, "
            << b.images.size() << " images\n";
  return 0;
}

// --- serve ---------------------------------------------------------------------

std::vector<Bundle> load_bundle_dir(const fs::path& root) {
  if (!fs::is_directory(root)) fail(ErrorCode::IoFailure, "not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Bundle> out;
  for (const auto& d : dirs) out.push_back(load_bundle(d));
  return out;
}

ApiServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& bundles_dir, const std::string& host, int port, const std::string& sessions_dir,
              const std::string& config_path, const std::string& fixed_story) {
  const auto cfg = load_config(config_path);
  ServiceOptions opts;
  opts.distraction_problems = static_cast<int>(cfg.get_int("experiment", "distraction_problems", 40));
  if (!fixed_story.empty()) {
    opts.fixed_story_id = fixed_story;
  } else if (auto v = cfg.get("experiment", "fixed_story")) {
    opts.fixed_story_id = *v;
  }
  auto bundles = load_bundle_dir(bundles_dir);
  SessionStore store(sessions_dir);
  ExperimentService service(std::move(bundles), store, system_clock_ms(), opts);
  ApiServer server(service);
  const int bound = server.bind(host, port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving " << service.bundles().size() << " bundles on http://" << host << ":" << bound
            << " (fixed story " << service.fixed_story_id() << ")\n"
            << std::flush;
  server.run();
  g_server = nullptr;
  return 0;
}

// --- analyze-gaze / report -----------------------------------------------------

AnalysisSettings analysis_settings(const std::string& layout_file) {
  return AnalysisSettings::from_config(load_config(layout_file));
}

SessionAnalysis analyze_dir(const fs::path& dir, const AnalysisSettings& settings, bool require_gaze) {
  const auto replay = replay_events(read_event_file(dir / "events.jsonl"));
  std::vector<GazePoint> gaze;
  const auto gaze_path = dir / "gaze.csv";
  if (fs::exists(gaze_path)) {
    try {
      gaze = parse_gaze_csv(read_text(gaze_path));
    } catch (const Error& e) {
      fail(e.code(), gaze_path.string() + ": " + e.what());
    }
  } else if (require_gaze) {
    fail(ErrorCode::IoFailure, "missing " + gaze_path.string());
  }
  return analyze_session(replay.log, gaze, settings);
}

int cmd_analyze_gaze(const std::string& session_dir, const std::string& layout_file, const std::string& out_dir) {
  const auto settings = analysis_settings(layout_file);
  const auto a = analyze_dir(session_dir, settings, true);
  const fs::path out = out_dir.empty() ? fs::path(session_dir) : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + out.string());

  nlohmann::json fix = nlohmann::json::array();
  nlohmann::json paths = nlohmann::json::array();
  HeatmapGrid total;
  total.width = settings.grid_w;
  total.height = settings.grid_h;
  total.cells.assign(static_cast<std::size_t>(settings.grid_w * settings.grid_h), 0.0);
  for (const auto& sg : a.slots) {
    fix.push_back({{"slot", sg.slot}, {"condition", to_string(sg.condition)}, {"fixations", fixations_to_json(sg.fixations)}});
    auto pj = sg.path.to_json();
    pj["slot"] = sg.slot;
    pj["condition"] = to_string(sg.condition);
    paths.push_back(pj);
    write_text(out / ("scanpath_slot" + std::to_string(sg.slot) + ".svg"), sg.path.to_svg(settings.screen));
    write_text(out / ("heatmap_slot" + std::to_string(sg.slot) + ".csv"), sg.heat.to_csv());
    for (std::size_t i = 0; i < total.cells.size(); ++i) total.cells[i] += sg.heat.cells[i];
  }
  write_text(out / "fixations.json", nlohmann::json{{"session_id", a.log.session_id}, {"slots", fix}}.dump(2) + "\n");
  write_text(out / "scanpath.json", nlohmann::json{{"session_id", a.log.session_id}, {"slots", paths}}.dump(2) + "\n");
  write_text(out / "aoi_ratios.csv", aoi_ratio_csv(a));
  write_text(out / "heatmap.csv", total.to_csv());
  write_text(out / "condition_report.csv", condition_report_csv(condition_report({a})));
  std::cout << "analyzed " << a.log.session_id << ": " << a.slots.size() << " reading slots, outputs in "
            << out.string() << "\n";
  return 0;
}

int cmd_report(const std::string& sessions_dir, const std::string& layout_file, const std::string& out_file) {
  const auto settings = analysis_settings(layout_file);
  if (!fs::is_directory(sessions_dir)) fail(ErrorCode::IoFailure, "not a directory: " + sessions_dir);
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(sessions_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "events.jsonl")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<SessionAnalysis> analyses;
  for (const auto& d : dirs) {
    auto a = analyze_dir(d, settings, false);
    if (a.log.done) analyses.push_back(std::move(a));
  }
  const auto csv = condition_report_csv(condition_report(analyses));
  if (out_file.empty()) {
    std::cout << csv;
  } else {
    write_text(out_file, csv);
    std::cout << "report over " << analyses.size() << " completed sessions written to " << out_file << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"genread: generated interactive textbooks, reading experiments and gaze analytics"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-bundle", "Generate a textbook bundle");
  g->add_flag("--mock", gen.mock, "Use offline deterministic providers");
  g->add_option("--seed", gen.seed, "Generation seed");
  g->add_option("--config", gen.config, "Config file")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output bundle directory")->required();
  g->add_option("--genre", gen.genre, "Preferred genre");
  g->add_option("--animal", gen.animal, "Preferred animal");
  g->add_option("--favorite-title", gen.favorite_title, "Favorite story title");
  g->add_option("--story-words", gen.story_words, "Target story length in words");
  g->add_option("--summary-words", gen.summary_words, "Target summary length in words");
  g->add_option("--retries", gen.retries, "Retries per generation stage");

  std::string validate_dir;
  auto* v = app.add_subcommand("validate-bundle", "Validate a bundle directory");
  v->add_option("--bundle,bundle", validate_dir, "Bundle directory")->required();

  std::string bundles_dir, host = "127.0.0.1", sessions_dir = "sessions", serve_config, fixed_story;
  int port = 8080;
  auto* s = app.add_subcommand("serve", "Serve the reading experiment over HTTP");
  s->add_option("--bundles", bundles_dir, "Directory holding four bundle directories")->required();
  s->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  s->add_option("--host", host, "Bind address");
  s->add_option("--sessions", sessions_dir, "Session storage directory");
  s->add_option("--config", serve_config, "Config file")->check(CLI::ExistingFile);
  s->add_option("--fixed-story", fixed_story, "Story id read under C1 by every group");

  std::string session_dir, layout_file, analyze_out;
  auto* an = app.add_subcommand("analyze-gaze", "Fixations, AOI ratios, scan paths and heatmaps for one session");
  an->add_option("--session", session_dir, "Session directory (events.jsonl + gaze.csv)")->required();
  an->add_option("--layout", layout_file, "Config file with [layout.Cn] and [fixation] sections")
      ->check(CLI::ExistingFile);
  an->add_option("--out", analyze_out, "Output directory (default: the session directory)");

  std::string report_sessions, report_layout, report_out;
  auto* r = app.add_subcommand("report", "Per-condition score and AOI report over all sessions");
  r->add_option("--sessions", report_sessions, "Directory of session directories")->required();
  r->add_option("--layout", report_layout, "Config file with layout and fixation sections")->check(CLI::ExistingFile);
  r->add_option("--out", report_out, "CSV output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (*g) return cmd_generate_bundle(gen);
    if (*v) return cmd_validate_bundle(validate_dir);
    if (*s) return cmd_serve(bundles_dir, host, port, sessions_dir, serve_config, fixed_story);
    if (*an) return cmd_analyze_gaze(session_dir, layout_file, analyze_out);
    if (*r) return cmd_report(report_sessions, report_layout, report_out);
  } catch (const Error& e) {
    std::cerr << "genread " << cmd << ": " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "genread " << cmd << ": io_failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "genread " << cmd << ": " << e.what() << "\n";
    return 3;
  }
  return 1;
}
