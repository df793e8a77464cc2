#pragma once

#include <string>

#include "genread/providers.hpp"

namespace genread {

struct ProviderEndpoint {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  double temperature = 0.7;
  int timeout_seconds = 120;

  // Reads <PREFIX>_URL, <PREFIX>_KEY and optionally <PREFIX>_MODEL. The
  // fallbacks apply when the variable is unset; the key has none.
  // Throws Configuration when URL or KEY is missing.
  static ProviderEndpoint from_env(const std::string& prefix, const std::string& default_model,
                                   const std::string& fallback_url = "");
};

// Chat-completions style adapter.
//   POST {base}/chat/completions
//   {"model", "temperature", "messages": [{"role": "user", "content": prompt}]}
//   -> {"choices": [{"message": {"content": "..."}}]}
class HttpTextProvider : public TextProvider {
 public:
  explicit HttpTextProvider(ProviderEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string generate_text(const TextGenRequest& req) override;
  std::string model_name() const override { return endpoint_.model; }

 private:
  ProviderEndpoint endpoint_;
};

// Image-generation adapter.
//   POST {base}/images/generations
//   {"model", "prompt", "n": 1, "size": "WxH", "response_format": "b64_json",
//    "seed"?, "reference_image_b64"?}
//   -> {"data": [{"b64_json": "..."}]}
class HttpImageProvider : public ImageProvider {
 public:
  HttpImageProvider(ProviderEndpoint endpoint, ArtifactStore& store, int width_px = 1024, int height_px = 1024)
      : endpoint_(std::move(endpoint)), store_(store), width_px_(width_px), height_px_(height_px) {}
  ImageArtifact generate_image(const ImageGenRequest& req) override;
  std::string model_name() const override { return endpoint_.model; }

 private:
  ProviderEndpoint endpoint_;
  ArtifactStore& store_;
  int width_px_;
  int height_px_;
};

// Joint embedding adapter.
//   POST {base}/embeddings {"model", "input": text}
//   POST {base}/embeddings {"model", "input_image_b64": data, "media_type": type}
//   -> {"data": [{"embedding": [..]}]}
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(ProviderEndpoint endpoint, std::size_t dims, std::size_t token_budget)
      : endpoint_(std::move(endpoint)), dims_(dims), token_budget_(token_budget) {}
  EmbeddingVector embed_text(const std::string& text) override;
  EmbeddingVector embed_image(const ImageArtifact& image) override;
  std::size_t dims() const override { return dims_; }
  std::size_t token_budget() const override { return token_budget_; }
  std::string model_name() const override { return endpoint_.model; }

 private:
  EmbeddingVector parse_embedding(const std::string& body) const;

  ProviderEndpoint endpoint_;
  std::size_t dims_;
  std::size_t token_budget_;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace genread
