#include "genread/providers.hpp"

#include <cmath>
#include <sstream>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {

void TextGenRequest::validate() const {
  require(!trim(instruction).empty(), "text request: instruction must be non-empty");
  require(max_output_words >= 1, "text request: max_output_words must be >= 1");
  if (target_words) require(*target_words >= 1, "text request: target_words must be >= 1");
}

std::string TextGenRequest::render_prompt() const {
  std::ostringstream out;
  out << instruction << "\n";
  if (!constraints.empty()) {
    out << "\nConstraints:\n";
    for (const auto& c : constraints) out << "- " << c << "\n";
  }
  if (!preferences.empty()) {
    out << "\nPreferences:\n";
    for (const auto& p : preferences) out << "- " << p << "\n";
  }
  if (!context.empty()) out << "\n---\n" << context << "\n---\n";
  return out.str();
}

void ImageGenRequest::validate() const {
  require(!trim(prompt_text).empty(), "image request: prompt_text must be non-empty");
  if (reference_image) require(!reference_image->empty(), "image request: empty reference id");
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), "embedding: dims must be positive");
  for (double v : values_) require(std::isfinite(v), "embedding: non-finite component");
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return EmbeddingVector(std::move(out));
}

void ImageArtifact::validate() const {
  require(!id.empty(), "image artifact: empty id");
  require(!bytes.empty(), "image artifact " + id + ": empty payload");
  require(width_px > 0 && height_px > 0, "image artifact " + id + ": dimensions must be positive");
}

void ArtifactStore::put(ImageArtifact artifact) {
  artifact.validate();
  std::lock_guard lock(mu_);
  artifacts_.insert_or_assign(artifact.id, std::move(artifact));
}

std::optional<ImageArtifact> ArtifactStore::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = artifacts_.find(id);
  if (it == artifacts_.end()) return std::nullopt;
  return it->second;
}

bool ArtifactStore::contains(const std::string& id) const {
  std::lock_guard lock(mu_);
  return artifacts_.count(id) != 0;
}

std::vector<std::string> ArtifactStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  out.reserve(artifacts_.size());
  for (const auto& [id, _] : artifacts_) out.push_back(id);
  return out;
}

std::size_t ArtifactStore::size() const {
  std::lock_guard lock(mu_);
  return artifacts_.size();
}

}  // namespace genread
