#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace genread {

// What a text request is for. Live providers only see the rendered prompt;
// the mock uses the task to decide which kind of document to emit.
enum class TextTask { Freeform, Story, Summary, Metadata, Questions };

struct TextGenRequest {
  TextTask task = TextTask::Freeform;
  std::string instruction;
  std::vector<std::string> constraints;
  std::vector<std::string> preferences;
  // Source material the instruction operates on (e.g. the story to summarize).
  std::string context;
  int max_output_words = 1000;
  std::optional<int> target_words;
  std::optional<std::uint64_t> seed;

  void validate() const;
  // Single prompt string: instruction, then constraint and preference
  // clauses, then the context block.
  std::string render_prompt() const;
};

struct ImageGenRequest {
  std::string prompt_text;
  std::optional<std::string> reference_image;
  std::vector<std::string> style_notes;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  // Throws PreconditionViolated on empty input or non-finite components.
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dims() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double norm() const;
  EmbeddingVector scaled(double factor) const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

struct ImageArtifact {
  std::string id;
  std::string media_type;
  std::vector<std::uint8_t> bytes;
  int width_px = 0;
  int height_px = 0;

  void validate() const;
};

// Holds every generated image for a build. Safe for concurrent use.
class ArtifactStore {
 public:
  void put(ImageArtifact artifact);
  std::optional<ImageArtifact> get(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, ImageArtifact> artifacts_;
};

class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual std::string generate_text(const TextGenRequest& req) = 0;
  virtual std::string model_name() const = 0;
};

class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  // Generates and stores an artifact. ReferenceNotFound when the request's
  // reference image is not in the store.
  virtual ImageArtifact generate_image(const ImageGenRequest& req) = 0;
  virtual std::string model_name() const = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingVector embed_text(const std::string& text) = 0;
  virtual EmbeddingVector embed_image(const ImageArtifact& image) = 0;
  virtual std::size_t dims() const = 0;
  virtual std::size_t token_budget() const = 0;
  virtual std::string model_name() const = 0;
};

inline constexpr std::size_t kDefaultEmbeddingDims = 512;
inline constexpr std::size_t kDefaultTokenBudget = 77;

}  // namespace genread
