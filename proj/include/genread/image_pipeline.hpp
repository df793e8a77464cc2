#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "genread/content.hpp"
#include "genread/errors.hpp"
#include "genread/providers.hpp"

namespace genread {

struct SentenceImage {
  int sentence_index = 0;
  std::string artifact_id;
  std::string prompt_text;
  std::optional<std::string> reference_artifact_id;  // image of sentence_index - 1

  friend bool operator==(const SentenceImage&, const SentenceImage&) = default;
};

// Thrown when a provider fails mid-story. Carries the images produced so far
// so the build can resume from the failing sentence.
class ImageGenerationInterrupted : public Error {
 public:
  ImageGenerationInterrupted(const std::string& message, std::vector<SentenceImage> partial)
      : Error(ErrorCode::ProviderUnavailable, message), partial_(std::move(partial)) {}
  const std::vector<SentenceImage>& partial() const noexcept { return partial_; }

 private:
  std::vector<SentenceImage> partial_;
};

// Prompt for one sentence: the sentence, character and style descriptors,
// and the full summary verbatim.
std::string compose_image_prompt(const Sentence& sentence, const StoryMetadata& metadata, const Summary& summary);

// One image per sentence, strictly in order; image k references image k-1.
// `resume_from` holds a prefix of previously generated images to keep.
std::vector<SentenceImage> generate_story_images(const Story& story, const StoryMetadata& metadata,
                                                 const Summary& summary, ImageProvider& provider,
                                                 std::vector<SentenceImage> resume_from = {},
                                                 std::optional<std::uint64_t> seed = std::nullopt);

// Throws DimMismatch or ZeroVector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

inline constexpr double kClipWeight = 2.5;

// w * max(cos(c, v), 0)
double clip_score(const EmbeddingVector& c, const EmbeddingVector& v, double w = kClipWeight);

inline constexpr int kSummarySegments = 5;

struct Segment {
  int index = 0;  // 1..5
  int first_sentence = 0;
  int last_sentence = 0;  // inclusive
  std::string text;       // full concatenated sentence text
  std::size_t full_token_count = 0;
  std::string embed_text;       // text actually sent to the encoder
  std::size_t token_count = 0;  // tokens of embed_text, always <= budget
  bool truncated = false;

  int size() const { return last_sentence - first_sentence + 1; }
  bool contains(int sentence_index) const {
    return sentence_index >= first_sentence && sentence_index <= last_sentence;
  }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Five contiguous, near-equal runs of sentences (earlier runs take the
// remainder). Runs over the token budget push boundary sentences into
// neighbours that can absorb them; a run still over budget is truncated for
// embedding and flagged.
std::vector<Segment> segment_for_summary(const Story& story, std::size_t token_budget, int k = kSummarySegments);

// Same, from sentence texts alone.
std::vector<Segment> segment_sentence_texts(const std::vector<std::string>& sentences, std::size_t token_budget,
                                            int k = kSummarySegments);

struct SelectionEntry {
  int segment_index = 0;
  int sentence_index = 0;
  std::string artifact_id;
  double clip_s = 0.0;
  bool segment_truncated = false;

  friend bool operator==(const SelectionEntry&, const SelectionEntry&) = default;
};

struct SummarySelection {
  std::vector<SelectionEntry> entries;

  void validate(const std::vector<Segment>& segments) const;
  friend bool operator==(const SummarySelection&, const SummarySelection&) = default;
};

using ImageVectors = std::map<std::string, EmbeddingVector>;

// Embeds every image once, keyed by artifact id.
ImageVectors embed_images(const std::vector<SentenceImage>& images, const ArtifactStore& store,
                          EmbeddingProvider& embedder);

// Pure selection over precomputed vectors: per segment, the argmax of
// clip_score among the segment's own images, ties to the lowest sentence index.
SummarySelection select_from_vectors(const std::vector<Segment>& segments, const std::vector<SentenceImage>& images,
                                     const std::vector<EmbeddingVector>& segment_vectors,
                                     const ImageVectors& image_vectors, double w = kClipWeight);

// Embeds each segment's text once, then selects.
SummarySelection select_summary_images(const std::vector<Segment>& segments,
                                       const std::vector<SentenceImage>& images, const ImageVectors& image_vectors,
                                       EmbeddingProvider& embedder, double w = kClipWeight);

void to_json(nlohmann::json& j, const SentenceImage& s);
void from_json(const nlohmann::json& j, SentenceImage& s);
void to_json(nlohmann::json& j, const SelectionEntry& e);
void to_json(nlohmann::json& j, const Segment& s);
void from_json(const nlohmann::json& j, Segment& s);
void from_json(const nlohmann::json& j, SelectionEntry& e);

}  // namespace genread
