#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <json.hpp>
#include <string>
#include <vector>

#include "genread/config.hpp"
#include "genread/content.hpp"
#include "genread/experiment.hpp"
#include "genread/image_pipeline.hpp"
#include "genread/providers.hpp"

namespace genread {

inline constexpr int kBundleSchemaVersion = 1;

struct GenerationSettings {
  int story_words = 500;
  double story_tolerance = 0.2;
  int summary_words = 50;
  double summary_tolerance = 0.3;
  int retries = 3;
  std::uint64_t seed = 0;
  double clip_weight = kClipWeight;

  WordBand story_band() const { return {story_words, story_tolerance}; }
  WordBand summary_band() const { return {summary_words, summary_tolerance}; }

  // Reads the [generation] section; missing keys keep the defaults.
  static GenerationSettings from_config(const Config& config);
};

struct Provenance {
  std::string text_model;
  std::string image_model;
  std::string embedding_model;
  std::size_t embedding_dims = 0;
  std::size_t token_budget = 0;
  std::uint64_t seed = 0;
  bool mock = false;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Providers {
  TextProvider& text;
  ImageProvider& image;
  EmbeddingProvider& embedder;
  ArtifactStore& store;  // where the image provider deposits artifacts
};

struct Bundle {
  std::string bundle_id;  // equals the story id
  std::string created_at;
  PreferenceSpec preferences;
  GenerationSettings settings;
  Provenance provenance;

  Story story;
  StoryMetadata metadata;
  Summary summary;
  QuestionSet questions;
  std::vector<SentenceImage> images;
  std::map<std::string, ImageArtifact> artifacts;
  ImageVectors image_vectors;
  std::vector<Segment> segments;
  std::vector<EmbeddingVector> segment_vectors;
  SummarySelection selection;

  // Checks every fragment and their cross references, including that the
  // stored selection is what the stored vectors select.
  void validate() const;
};

// Runs the whole generation pipeline. Errors carry the failing stage name
// ("bundle stage 'summary': ...").
Bundle build_bundle(const PreferenceSpec& prefs, const GenerationSettings& settings, Providers providers,
                    const std::string& created_at, bool mock);

// Writes manifest.json plus one file per fragment and images/NNN.<ext>.
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);

// Reads and validates. Throws IoFailure for missing files, MalformedInput for
// unparsable ones and ValidationFailed for broken invariants.
Bundle load_bundle(const std::filesystem::path& dir);

// Content served for one reading condition: story text and sentence spans
// always; per-sentence images for C2, the text summary for C3, the five
// selected images in segment order for C4.
nlohmann::json condition_payload(const Bundle& bundle, ReadingCondition condition);

// Post-test questions without the answer key.
nlohmann::json questions_payload(const Bundle& bundle);

}  // namespace genread
