#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

#include "genread/providers.hpp"

namespace genread {

struct MockTextOptions {
  std::uint64_t seed = 0;
  // Rigging for failure-path tests: story and summary responses are cut to
  // exactly this many words.
  std::optional<int> forced_word_count;
};

// Offline text provider. Every response is a pure function of the request
// and the seed. Story/summary/metadata/question tasks answer in the
// interchange formats the content pipeline parses.
class MockTextProvider : public TextProvider {
 public:
  explicit MockTextProvider(MockTextOptions options = {}) : options_(options) {}

  std::string generate_text(const TextGenRequest& req) override;
  std::string model_name() const override { return "mock-text-v1"; }

 private:
  MockTextOptions options_;
};

// Offline image provider. Emits a small PPM whose pixels are a function of
// (prompt_text, seed); ids are content addressed.
class MockImageProvider : public ImageProvider {
 public:
  explicit MockImageProvider(ArtifactStore& store, std::uint64_t seed = 0)
      : store_(store), seed_(seed) {}

  ImageArtifact generate_image(const ImageGenRequest& req) override;
  std::string model_name() const override { return "mock-image-v1"; }

 private:
  ArtifactStore& store_;
  std::uint64_t seed_;
};

// Offline joint embedder: hash of the input seeds a Gaussian direction which
// is then normalized to unit length.
class MockEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::size_t dims = kDefaultEmbeddingDims,
                                 std::size_t token_budget = kDefaultTokenBudget,
                                 std::uint64_t seed = 0);

  EmbeddingVector embed_text(const std::string& text) override;
  EmbeddingVector embed_image(const ImageArtifact& image) override;
  std::size_t dims() const override { return dims_; }
  std::size_t token_budget() const override { return token_budget_; }
  std::string model_name() const override { return "mock-embed-v1"; }

 private:
  EmbeddingVector direction(std::uint64_t key) const;

  std::size_t dims_;
  std::size_t token_budget_;
  std::uint64_t seed_;
};

// Replays canned responses in order; throws ProviderUnavailable once
// exhausted. Used to rig malformed or out-of-band provider output.
class ScriptedTextProvider : public TextProvider {
 public:
  void push(std::string response);
  std::string generate_text(const TextGenRequest& req) override;
  std::string model_name() const override { return "scripted"; }
  int calls() const;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> responses_;
  int calls_ = 0;
};

}  // namespace genread
