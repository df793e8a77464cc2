#include "genread/bundle.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {

using json = nlohmann::json;
namespace fs = std::filesystem;

GenerationSettings GenerationSettings::from_config(const Config& config) {
  GenerationSettings s;
  s.story_words = static_cast<int>(config.get_int("generation", "story_words", s.story_words));
  s.story_tolerance = config.get_double("generation", "story_tolerance", s.story_tolerance);
  s.summary_words = static_cast<int>(config.get_int("generation", "summary_words", s.summary_words));
  s.summary_tolerance = config.get_double("generation", "summary_tolerance", s.summary_tolerance);
  s.retries = static_cast<int>(config.get_int("generation", "retries", s.retries));
  s.seed = static_cast<std::uint64_t>(config.get_int("generation", "seed", static_cast<long long>(s.seed)));
  s.clip_weight = config.get_double("generation", "clip_weight", s.clip_weight);
  require(s.retries >= 0, "generation.retries must be >= 0");
  require(s.clip_weight > 0.0, "generation.clip_weight must be positive");
  return s;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.code(), std::string("bundle stage '") + name + "': " + e.what());
  }
}

std::string image_extension(const std::string& media_type) {
  if (media_type == "image/x-portable-pixmap") return "ppm";
  if (media_type == "image/png") return "png";
  if (media_type == "image/jpeg") return "jpg";
  if (media_type == "image/webp") return "webp";
  return "bin";
}

std::string image_file_name(int sentence_index, const std::string& media_type) {
  std::ostringstream os;
  os << "images/";
  os.width(3);
  os.fill('0');
  os << sentence_index << '.' << image_extension(media_type);
  return os.str();
}

json vector_json(const EmbeddingVector& v) { return json(std::vector<double>(v.values().begin(), v.values().end())); }

json preferences_json(const PreferenceSpec& p) {
  json j = json::object();
  if (p.genre) j["genre"] = *p.genre;
  if (p.animal) j["animal"] = *p.animal;
  if (p.favorite_title) j["favorite_title"] = *p.favorite_title;
  return j;
}

PreferenceSpec preferences_from(const json& j) {
  PreferenceSpec p;
  if (j.contains("genre")) p.genre = j.at("genre").get<std::string>();
  if (j.contains("animal")) p.animal = j.at("animal").get<std::string>();
  if (j.contains("favorite_title")) p.favorite_title = j.at("favorite_title").get<std::string>();
  return p;
}

json settings_json(const GenerationSettings& s) {
  return {{"story_words", s.story_words},     {"story_tolerance", s.story_tolerance},
          {"summary_words", s.summary_words}, {"summary_tolerance", s.summary_tolerance},
          {"retries", s.retries},             {"seed", s.seed},
          {"clip_weight", s.clip_weight}};
}

GenerationSettings settings_from(const json& j) {
  GenerationSettings s;
  s.story_words = j.at("story_words").get<int>();
  s.story_tolerance = j.at("story_tolerance").get<double>();
  s.summary_words = j.at("summary_words").get<int>();
  s.summary_tolerance = j.at("summary_tolerance").get<double>();
  s.retries = j.at("retries").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.clip_weight = j.at("clip_weight").get<double>();
  return s;
}

json provenance_json(const Provenance& p) {
  return {{"text_model", p.text_model},
          {"image_model", p.image_model},
          {"embedding_model", p.embedding_model},
          {"embedding_dims", p.embedding_dims},
          {"token_budget", p.token_budget},
          {"seed", p.seed},
          {"mock", p.mock}};
}

Provenance provenance_from(const json& j) {
  Provenance p;
  p.text_model = j.at("text_model").get<std::string>();
  p.image_model = j.at("image_model").get<std::string>();
  p.embedding_model = j.at("embedding_model").get<std::string>();
  p.embedding_dims = j.at("embedding_dims").get<std::size_t>();
  p.token_budget = j.at("token_budget").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.mock = j.at("mock").get<bool>();
  return p;
}

const std::map<std::string, std::string> kFragments = {
    {"story", "story.json"},          {"metadata", "metadata.json"},   {"summary", "summary.json"},
    {"questions", "questions.json"},  {"images", "images.json"},       {"embeddings", "embeddings.json"},
    {"selection", "summary_selection.json"}};

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

void write_json(const fs::path& path, json j) { write_file(path, j.dump(2) + "\n"); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedInput, path.string() + ": " + e.what());
  }
}

json fragment(json body) {
  json j = {{"schema_version", kBundleSchemaVersion}};
  j.update(body);
  return j;
}

}  // namespace

Bundle build_bundle(const PreferenceSpec& prefs, const GenerationSettings& settings, Providers providers,
                    const std::string& created_at, bool mock) {
  Bundle b;
  b.created_at = created_at;
  b.preferences = prefs;
  b.settings = settings;
  b.provenance = {providers.text.model_name(),
                  providers.image.model_name(),
                  providers.embedder.model_name(),
                  providers.embedder.dims(),
                  providers.embedder.token_budget(),
                  settings.seed,
                  mock};
  const RetryPolicy policy{settings.retries, settings.seed};

  b.story = stage("story", [&] {
    return generate_story(prefs, settings.story_words, settings.story_tolerance, providers.text, policy);
  });
  b.bundle_id = b.story.id;
  b.metadata = stage("metadata", [&] { return extract_story_metadata(b.story, providers.text, policy); });
  b.summary = stage("summary", [&] {
    return generate_summary(b.story, settings.summary_words, settings.summary_tolerance, providers.text, policy);
  });
  b.questions = stage("questions", [&] { return generate_questions(b.story, providers.text, policy); });
  b.images = stage("images", [&] {
    return generate_story_images(b.story, b.metadata, b.summary, providers.image, {}, settings.seed);
  });
  stage("images", [&] {
    for (const auto& img : b.images) {
      auto art = providers.store.get(img.artifact_id);
      if (!art) fail(ErrorCode::ReferenceNotFound, "artifact not stored: " + img.artifact_id);
      b.artifacts.emplace(img.artifact_id, std::move(*art));
    }
  });
  b.image_vectors = stage("embeddings", [&] { return embed_images(b.images, providers.store, providers.embedder); });
  b.segments = stage("segments", [&] { return segment_for_summary(b.story, providers.embedder.token_budget()); });
  b.segment_vectors = stage("embeddings", [&] {
    std::vector<EmbeddingVector> out;
    for (const auto& s : b.segments) out.push_back(providers.embedder.embed_text(s.embed_text));
    return out;
  });
  b.selection = stage("selection", [&] {
    return select_from_vectors(b.segments, b.images, b.segment_vectors, b.image_vectors, settings.clip_weight);
  });
  stage("validate", [&] { b.validate(); });
  return b;
}

void Bundle::validate() const {
  auto invalid = [&](const std::string& m) { fail(ErrorCode::ValidationFailed, "bundle " + bundle_id + ": " + m); };

  story.validate(settings.story_band());
  if (bundle_id != story.id) invalid("bundle id differs from story id");
  if (make_story(story.title, story.body) != story) invalid("story id or sentence spans do not match the body");
  metadata.validate();
  for (const auto& [idx, _] : metadata.per_sentence_entities) {
    if (idx < 0 || idx >= static_cast<int>(story.sentences.size())) invalid("metadata names a missing sentence");
  }
  summary.validate(settings.summary_band());
  if (summary.story_id != story.id) invalid("summary belongs to another story");
  questions.validate();
  if (questions.story_id != story.id) invalid("questions belong to another story");

  if (images.size() != story.sentences.size()) {
    invalid("expected one image per sentence (" + std::to_string(story.sentences.size()) + "), got " +
            std::to_string(images.size()));
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images[i];
    if (img.sentence_index != static_cast<int>(i)) invalid("image order does not follow sentences");
    const std::optional<std::string> expected_ref =
        i == 0 ? std::nullopt : std::optional<std::string>(images[i - 1].artifact_id);
    if (img.reference_artifact_id != expected_ref) invalid("image " + std::to_string(i) + " breaks the reference chain");
    if (!ids.insert(img.artifact_id).second) invalid("duplicate image id " + img.artifact_id);
    const auto art = artifacts.find(img.artifact_id);
    if (art == artifacts.end()) invalid("missing image bytes for " + img.artifact_id);
    art->second.validate();
    const auto vec = image_vectors.find(img.artifact_id);
    if (vec == image_vectors.end()) invalid("missing embedding for " + img.artifact_id);
    if (vec->second.dims() != provenance.embedding_dims) invalid("image embedding has the wrong dimension");
  }

  if (segments.size() != static_cast<std::size_t>(kSummarySegments)) invalid("expected 5 segments");
  int next = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.index != static_cast<int>(i) + 1 || s.first_sentence != next || s.last_sentence < s.first_sentence) {
      invalid("segments do not tile the sentences");
    }
    if (s.token_count > provenance.token_budget || count_tokens(s.embed_text) != s.token_count) {
      invalid("segment " + std::to_string(s.index) + " embed text exceeds the token budget");
    }
    next = s.last_sentence + 1;
  }
  if (next != static_cast<int>(story.sentences.size())) invalid("segments do not cover every sentence");
  if (segment_vectors.size() != segments.size()) invalid("expected one vector per segment");
  for (const auto& v : segment_vectors) {
    if (v.dims() != provenance.embedding_dims) invalid("segment embedding has the wrong dimension");
  }

  selection.validate(segments);
  if (select_from_vectors(segments, images, segment_vectors, image_vectors, settings.clip_weight) != selection) {
    invalid("stored selection is not the argmax over stored vectors");
  }
}

void write_bundle(const Bundle& b, const fs::path& dir) {
  std::error_code ec;
  // stale images from an earlier, longer story must not survive a rebuild
  fs::remove_all(dir / "images", ec);
  fs::create_directories(dir / "images", ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + (dir / "images").string() + ": " + ec.message());

  json fragments = json::object();
  for (const auto& [k, v] : kFragments) fragments[k] = v;
  write_json(dir / "manifest.json", fragment({{"bundle_id", b.bundle_id},
                                              {"story_id", b.story.id},
                                              {"created_at", b.created_at},
                                              {"fragments", fragments},
                                              {"provenance", provenance_json(b.provenance)},
                                              {"generation", settings_json(b.settings)},
                                              {"preferences", preferences_json(b.preferences)}}));

  write_json(dir / kFragments.at("story"), fragment(json(b.story)));
  write_json(dir / kFragments.at("metadata"), fragment({{"story_id", b.story.id}, {"metadata", b.metadata}}));
  write_json(dir / kFragments.at("summary"), fragment(json(b.summary)));
  write_json(dir / kFragments.at("questions"), fragment(json(b.questions)));

  json imgs = json::array();
  for (const auto& img : b.images) {
    const auto& art = b.artifacts.at(img.artifact_id);
    const auto file = image_file_name(img.sentence_index, art.media_type);
    write_file(dir / file, std::string(art.bytes.begin(), art.bytes.end()));
    json j = img;
    j["file"] = file;
    j["media_type"] = art.media_type;
    j["width_px"] = art.width_px;
    j["height_px"] = art.height_px;
    imgs.push_back(j);
  }
  write_json(dir / kFragments.at("images"), fragment({{"story_id", b.story.id}, {"images", imgs}}));

  json image_vecs = json::object();
  for (const auto& [id, v] : b.image_vectors) image_vecs[id] = vector_json(v);
  json seg_vecs = json::array();
  for (const auto& v : b.segment_vectors) seg_vecs.push_back(vector_json(v));
  write_json(dir / kFragments.at("embeddings"), fragment({{"model", b.provenance.embedding_model},
                                                         {"dims", b.provenance.embedding_dims},
                                                         {"images", image_vecs},
                                                         {"segments", seg_vecs}}));

  write_json(dir / kFragments.at("selection"),
             fragment({{"clip_weight", b.settings.clip_weight},
                       {"token_budget", b.provenance.token_budget},
                       {"segments", b.segments},
                       {"entries", b.selection.entries}}));
}

Bundle load_bundle(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  auto check_version = [](const json& j, const fs::path& p) {
    if (!j.is_object() || j.value("schema_version", -1) != kBundleSchemaVersion) {
      fail(ErrorCode::ValidationFailed, p.string() + ": unsupported schema_version");
    }
  };
  check_version(manifest, dir / "manifest.json");

  Bundle b;
  try {
    b.bundle_id = manifest.at("bundle_id").get<std::string>();
    b.created_at = manifest.at("created_at").get<std::string>();
    b.provenance = provenance_from(manifest.at("provenance"));
    b.settings = settings_from(manifest.at("generation"));
    b.preferences = preferences_from(manifest.at("preferences"));
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedInput, (dir / "manifest.json").string() + ": " + e.what());
  }

  const auto frag_paths = manifest.at("fragments");
  auto load = [&](const char* key) {
    if (!frag_paths.contains(key)) fail(ErrorCode::ValidationFailed, std::string("manifest lacks fragment ") + key);
    const auto path = dir / frag_paths.at(key).get<std::string>();
    auto j = read_json(path);
    check_version(j, path);
    return std::pair{j, path};
  };
  auto parse = [](const fs::path& path, auto&& f) {
    try {
      f();
    } catch (const json::exception& e) {
      fail(ErrorCode::MalformedInput, path.string() + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::PreconditionViolated) fail(ErrorCode::MalformedInput, path.string() + ": " + e.what());
      throw;
    }
  };

  {
    auto [j, p] = load("story");
    parse(p, [&] { b.story = j.get<Story>(); });
  }
  {
    auto [j, p] = load("metadata");
    parse(p, [&] { b.metadata = j.at("metadata").get<StoryMetadata>(); });
  }
  {
    auto [j, p] = load("summary");
    parse(p, [&] { b.summary = j.get<Summary>(); });
  }
  {
    auto [j, p] = load("questions");
    parse(p, [&] { b.questions = j.get<QuestionSet>(); });
  }
  {
    auto [j, p] = load("images");
    parse(p, [&] {
      for (const auto& x : j.at("images")) {
        auto img = x.get<SentenceImage>();
        const auto bytes = read_file(dir / x.at("file").get<std::string>());
        ImageArtifact art;
        art.id = img.artifact_id;
        art.media_type = x.at("media_type").get<std::string>();
        art.width_px = x.at("width_px").get<int>();
        art.height_px = x.at("height_px").get<int>();
        art.bytes.assign(bytes.begin(), bytes.end());
        b.artifacts[art.id] = std::move(art);
        b.images.push_back(std::move(img));
      }
    });
  }
  {
    auto [j, p] = load("embeddings");
    parse(p, [&] {
      for (const auto& [id, v] : j.at("images").items()) {
        b.image_vectors.emplace(id, EmbeddingVector(v.get<std::vector<double>>()));
      }
      for (const auto& v : j.at("segments")) b.segment_vectors.emplace_back(v.get<std::vector<double>>());
    });
  }
  {
    auto [j, p] = load("selection");
    parse(p, [&] {
      b.segments = j.at("segments").get<std::vector<Segment>>();
      b.selection.entries = j.at("entries").get<std::vector<SelectionEntry>>();
    });
  }
  b.validate();
  return b;
}

json condition_payload(const Bundle& b, ReadingCondition condition) {
  json sentences = json::array();
  for (const auto& s : b.story.sentences) {
    sentences.push_back({{"index", s.index}, {"text", s.text}, {"begin", s.begin}, {"end", s.end}});
  }
  json j = {{"bundle_id", b.bundle_id},
            {"story_id", b.story.id},
            {"condition", to_string(condition)},
            {"label", condition_label(condition)},
            {"title", b.story.title},
            {"text", b.story.body},
            {"word_count", b.story.word_count},
            {"time_limit_s", reading_time_limit(b.story.word_count)},
            {"sentences", sentences}};
  auto url = [&](const std::string& id) { return "/bundles/" + b.bundle_id + "/images/" + id; };
  switch (condition) {
    case ReadingCondition::C1:
      break;
    case ReadingCondition::C2: {
      json imgs = json::array();
      for (const auto& img : b.images) {
        imgs.push_back({{"sentence_index", img.sentence_index}, {"artifact_id", img.artifact_id}, {"url", url(img.artifact_id)}});
      }
      j["sentence_images"] = imgs;
      break;
    }
    case ReadingCondition::C3:
      j["summary"] = {{"text", b.summary.text}, {"word_count", b.summary.word_count}};
      break;
    case ReadingCondition::C4: {
      json imgs = json::array();
      for (const auto& e : b.selection.entries) {
        imgs.push_back({{"segment_index", e.segment_index},
                        {"sentence_index", e.sentence_index},
                        {"artifact_id", e.artifact_id},
                        {"url", url(e.artifact_id)}});
      }
      j["summary_images"] = imgs;
      break;
    }
  }
  return j;
}

json questions_payload(const Bundle& b) {
  json qs = json::array();
  for (const auto& q : b.questions.questions) {
    qs.push_back({{"index", q.index}, {"format", to_string(q.format)}, {"stem", q.stem}, {"options", q.options}});
  }
  return {{"bundle_id", b.bundle_id}, {"story_id", b.story.id}, {"questions", qs}};
}

}  // namespace genread
