#include "genread/http_providers.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <cstdlib>
#include <json.hpp>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {
namespace {

using nlohmann::json;

struct SplitUrl {
  std::string origin;
  std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

std::string post_json(const ProviderEndpoint& ep, const std::string& path, const json& body) {
  const auto url = split_url(ep.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(ep.timeout_seconds);
  client.set_write_timeout(ep.timeout_seconds);
  httplib::Headers headers = {{"Authorization", "Bearer " + ep.api_key}};
  auto res = client.Post(url.path_prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    fail(ErrorCode::ProviderUnavailable,
         ep.base_url + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorCode::ProviderUnavailable,
         ep.base_url + path + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
  }
  return res->body;
}

json parse_response(const std::string& body, const std::string& what) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    fail(ErrorCode::EmptyResponse, what + ": unparseable response: " + e.what());
  }
}

}  // namespace

ProviderEndpoint ProviderEndpoint::from_env(const std::string& prefix, const std::string& default_model,
                                            const std::string& fallback_url) {
  auto get = [](const std::string& name) -> std::string {
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string();
  };
  ProviderEndpoint ep;
  ep.base_url = get(prefix + "_URL");
  if (ep.base_url.empty()) ep.base_url = fallback_url;
  ep.api_key = get(prefix + "_KEY");
  ep.model = get(prefix + "_MODEL");
  if (ep.model.empty()) ep.model = default_model;
  if (ep.base_url.empty()) fail(ErrorCode::Configuration, prefix + "_URL is not set (use --mock for offline runs)");
  if (ep.api_key.empty()) fail(ErrorCode::Configuration, prefix + "_KEY is not set (use --mock for offline runs)");
  return ep;
}

std::string HttpTextProvider::generate_text(const TextGenRequest& req) {
  req.validate();
  json body = {{"model", endpoint_.model},
               {"temperature", endpoint_.temperature},
               {"messages", json::array({{{"role", "user"}, {"content", req.render_prompt()}}})}};
  if (req.seed) body["seed"] = *req.seed;
  const auto parsed = parse_response(post_json(endpoint_, "/chat/completions", body), "text provider");
  std::string text;
  try {
    text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    fail(ErrorCode::EmptyResponse, "text provider: response has no choices[0].message.content");
  }
  if (trim(text).empty()) fail(ErrorCode::EmptyResponse, "text provider: empty completion");
  return text;
}

ImageArtifact HttpImageProvider::generate_image(const ImageGenRequest& req) {
  req.validate();
  json body = {{"model", endpoint_.model},
               {"prompt", req.prompt_text},
               {"n", 1},
               {"size", std::to_string(width_px_) + "x" + std::to_string(height_px_)},
               {"response_format", "b64_json"}};
  if (req.seed) body["seed"] = *req.seed;
  if (req.reference_image) {
    auto ref = store_.get(*req.reference_image);
    if (!ref) fail(ErrorCode::ReferenceNotFound, "reference image not found: " + *req.reference_image);
    body["reference_image_b64"] = base64_encode(ref->bytes);
  }
  const auto parsed = parse_response(post_json(endpoint_, "/images/generations", body), "image provider");
  ImageArtifact art;
  try {
    art.bytes = base64_decode(parsed.at("data").at(0).at("b64_json").get<std::string>());
  } catch (const json::exception&) {
    fail(ErrorCode::EmptyResponse, "image provider: response has no data[0].b64_json");
  }
  if (art.bytes.empty()) fail(ErrorCode::EmptyResponse, "image provider: empty image payload");
  art.media_type = "image/png";
  art.width_px = width_px_;
  art.height_px = height_px_;
  std::string_view raw(reinterpret_cast<const char*>(art.bytes.data()), art.bytes.size());
  art.id = "img-" + hex64(fnv1a64(raw));
  store_.put(art);
  return art;
}

EmbeddingVector HttpEmbeddingProvider::parse_embedding(const std::string& body) const {
  const auto parsed = parse_response(body, "embedding provider");
  std::vector<double> values;
  try {
    values = parsed.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception&) {
    fail(ErrorCode::EmptyResponse, "embedding provider: response has no data[0].embedding");
  }
  if (values.size() != dims_) {
    fail(ErrorCode::DimMismatch, "embedding provider returned " + std::to_string(values.size()) +
                                     " dims, configured " + std::to_string(dims_));
  }
  return EmbeddingVector(std::move(values));
}

EmbeddingVector HttpEmbeddingProvider::embed_text(const std::string& text) {
  require(!trim(text).empty(), "embed_text: empty input");
  const auto tokens = count_tokens(text);
  if (tokens > token_budget_) {
    fail(ErrorCode::InputTooLong, "embed_text: " + std::to_string(tokens) + " tokens exceeds budget of " +
                                      std::to_string(token_budget_));
  }
  return parse_embedding(post_json(endpoint_, "/embeddings", {{"model", endpoint_.model}, {"input", text}}));
}

EmbeddingVector HttpEmbeddingProvider::embed_image(const ImageArtifact& image) {
  image.validate();
  return parse_embedding(post_json(endpoint_, "/embeddings",
                                   {{"model", endpoint_.model},
                                    {"input_image_b64", base64_encode(image.bytes)},
                                    {"media_type", image.media_type}}));
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
  }
  if (clean.size() % 4 != 0) fail(ErrorCode::MalformedInput, "base64: length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) fail(ErrorCode::MalformedInput, "base64: invalid input");
  std::size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace genread
