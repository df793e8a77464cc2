#include "genread/image_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "genread/text_utils.hpp"

namespace genread {

using nlohmann::json;

std::string compose_image_prompt(const Sentence& sentence, const StoryMetadata& metadata, const Summary& summary) {
  std::ostringstream out;
  out << "Illustrate this moment of a children's story: \"" << sentence.text << "\"\n";
  if (!metadata.characters.empty()) {
    out << "Characters:";
    for (std::size_t i = 0; i < metadata.characters.size(); ++i) {
      const auto& c = metadata.characters[i];
      out << (i ? ", " : " ") << c.name;
      if (!c.descriptor.empty()) out << " (" << c.descriptor << ")";
    }
    out << "\n";
  }
  if (!metadata.style_descriptors.empty()) {
    out << "Style:";
    for (std::size_t i = 0; i < metadata.style_descriptors.size(); ++i) {
      out << (i ? ", " : " ") << metadata.style_descriptors[i];
    }
    out << "\n";
  }
  out << "Story summary: " << summary.text << "\n";
  out << "Keep characters and style consistent with the reference image when one is given.";
  return out.str();
}

std::vector<SentenceImage> generate_story_images(const Story& story, const StoryMetadata& metadata,
                                                 const Summary& summary, ImageProvider& provider,
                                                 std::vector<SentenceImage> resume_from,
                                                 std::optional<std::uint64_t> seed) {
  require(!story.sentences.empty(), "generate_story_images: story is not segmented");
  require(resume_from.size() <= story.sentences.size(), "generate_story_images: resume list longer than story");
  for (std::size_t i = 0; i < resume_from.size(); ++i) {
    const auto& img = resume_from[i];
    require(img.sentence_index == static_cast<int>(i), "generate_story_images: resume list is not an in-order prefix");
    const auto expected_ref = i == 0 ? std::optional<std::string>() : resume_from[i - 1].artifact_id;
    require(img.reference_artifact_id == expected_ref, "generate_story_images: resume list reference chain broken");
  }

  std::vector<SentenceImage> images = std::move(resume_from);
  for (std::size_t k = images.size(); k < story.sentences.size(); ++k) {
    const auto& sentence = story.sentences[k];
    ImageGenRequest req;
    req.prompt_text = compose_image_prompt(sentence, metadata, summary);
    req.style_notes = metadata.style_descriptors;
    req.seed = seed;
    if (k > 0) req.reference_image = images.back().artifact_id;

    ImageArtifact art;
    try {
      art = provider.generate_image(req);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProviderUnavailable) throw;
      throw ImageGenerationInterrupted(
          "image generation stopped at sentence " + std::to_string(k) + ": " + e.what(), images);
    }
    images.push_back({sentence.index, art.id, req.prompt_text, req.reference_image});
  }
  return images;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dims() != v.dims()) {
    fail(ErrorCode::DimMismatch,
         "cosine: dims " + std::to_string(u.dims()) + " vs " + std::to_string(v.dims()));
  }
  const auto a = u.values();
  const auto b = v.values();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::ZeroVector, "cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double clip_score(const EmbeddingVector& c, const EmbeddingVector& v, double w) {
  return w * std::max(cosine(c, v), 0.0);
}

std::vector<Segment> segment_sentence_texts(const std::vector<std::string>& sentences, std::size_t token_budget,
                                            int k) {
  require(k >= 1, "segment_for_summary: k must be >= 1");
  require(token_budget > 0, "segment_for_summary: token_budget must be positive");
  const int n = static_cast<int>(sentences.size());
  if (n < k) {
    fail(ErrorCode::TooFewSentences,
         "segment_for_summary: " + std::to_string(n) + " sentences, need at least " + std::to_string(k));
  }

  std::vector<std::size_t> tokens(sentences.size());
  std::transform(sentences.begin(), sentences.end(), tokens.begin(),
                 [](const std::string& s) { return count_tokens(s); });

  std::vector<int> sizes(static_cast<std::size_t>(k), n / k);
  for (int i = 0; i < n % k; ++i) ++sizes[static_cast<std::size_t>(i)];

  auto first_of = [&](int seg) {
    return std::accumulate(sizes.begin(), sizes.begin() + seg, 0);
  };
  auto seg_tokens = [&](int seg) {
    const int first = first_of(seg);
    std::size_t total = 0;
    for (int s = first; s < first + sizes[static_cast<std::size_t>(seg)]; ++s) total += tokens[static_cast<std::size_t>(s)];
    return total;
  };

  // Greedy shift: move a boundary sentence out of an over-budget run into a
  // neighbour that stays within budget. Total excess strictly decreases, so
  // this terminates.
  bool moved = true;
  while (moved) {
    moved = false;
    for (int i = 0; i < k && !moved; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (seg_tokens(i) <= token_budget || sizes[si] < 2) continue;
      const int first = first_of(i);
      const int last = first + sizes[si] - 1;
      if (i + 1 < k && seg_tokens(i + 1) + tokens[static_cast<std::size_t>(last)] <= token_budget) {
        --sizes[si];
        ++sizes[si + 1];
        moved = true;
      } else if (i > 0 && seg_tokens(i - 1) + tokens[static_cast<std::size_t>(first)] <= token_budget) {
        --sizes[si];
        ++sizes[si - 1];
        moved = true;
      }
    }
  }

  std::vector<Segment> out;
  int cursor = 0;
  for (int i = 0; i < k; ++i) {
    Segment seg;
    seg.index = i + 1;
    seg.first_sentence = cursor;
    seg.last_sentence = cursor + sizes[static_cast<std::size_t>(i)] - 1;
    for (int s = seg.first_sentence; s <= seg.last_sentence; ++s) {
      if (!seg.text.empty()) seg.text += ' ';
      seg.text += sentences[static_cast<std::size_t>(s)];
    }
    seg.full_token_count = count_tokens(seg.text);
    if (seg.full_token_count > token_budget) {
      seg.embed_text = truncate_to_tokens(seg.text, token_budget);
      seg.truncated = true;
    } else {
      seg.embed_text = seg.text;
    }
    seg.token_count = count_tokens(seg.embed_text);
    cursor = seg.last_sentence + 1;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Segment> segment_for_summary(const Story& story, std::size_t token_budget, int k) {
  std::vector<std::string> texts;
  texts.reserve(story.sentences.size());
  for (const auto& s : story.sentences) texts.push_back(s.text);
  return segment_sentence_texts(texts, token_budget, k);
}

void SummarySelection::validate(const std::vector<Segment>& segments) const {
  if (entries.size() != segments.size()) {
    fail(ErrorCode::ValidationFailed, "summary selection: expected " + std::to_string(segments.size()) +
                                          " entries, got " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.segment_index != segments[i].index) fail(ErrorCode::ValidationFailed, "summary selection: segment order");
    if (!segments[i].contains(e.sentence_index)) {
      fail(ErrorCode::ValidationFailed, "summary selection: sentence " + std::to_string(e.sentence_index) +
                                            " outside segment " + std::to_string(e.segment_index));
    }
    if (!(e.clip_s >= 0.0)) fail(ErrorCode::ValidationFailed, "summary selection: negative score");
  }
}

ImageVectors embed_images(const std::vector<SentenceImage>& images, const ArtifactStore& store,
                          EmbeddingProvider& embedder) {
  ImageVectors out;
  for (const auto& img : images) {
    if (out.count(img.artifact_id)) continue;
    auto art = store.get(img.artifact_id);
    if (!art) fail(ErrorCode::ReferenceNotFound, "embed_images: artifact not stored: " + img.artifact_id);
    out.emplace(img.artifact_id, embedder.embed_image(*art));
  }
  return out;
}

SummarySelection select_from_vectors(const std::vector<Segment>& segments, const std::vector<SentenceImage>& images,
                                     const std::vector<EmbeddingVector>& segment_vectors,
                                     const ImageVectors& image_vectors, double w) {
  require(segment_vectors.size() == segments.size(), "select_summary_images: one vector per segment required");
  SummarySelection selection;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const SentenceImage* best = nullptr;
    double best_score = 0.0;
    for (const auto& img : images) {
      if (!seg.contains(img.sentence_index)) continue;
      auto it = image_vectors.find(img.artifact_id);
      require(it != image_vectors.end(), "select_summary_images: no vector for " + img.artifact_id);
      const double score = clip_score(segment_vectors[i], it->second, w);
      if (!best || score > best_score || (score == best_score && img.sentence_index < best->sentence_index)) {
        best = &img;
        best_score = score;
      }
    }
    if (!best) {
      fail(ErrorCode::EmptySegmentCandidates, "select_summary_images: segment " + std::to_string(seg.index) +
                                                  " has no images");
    }
    selection.entries.push_back({seg.index, best->sentence_index, best->artifact_id, best_score, seg.truncated});
  }
  return selection;
}

SummarySelection select_summary_images(const std::vector<Segment>& segments,
                                       const std::vector<SentenceImage>& images, const ImageVectors& image_vectors,
                                       EmbeddingProvider& embedder, double w) {
  std::vector<EmbeddingVector> segment_vectors;
  segment_vectors.reserve(segments.size());
  for (const auto& seg : segments) segment_vectors.push_back(embedder.embed_text(seg.embed_text));
  return select_from_vectors(segments, images, segment_vectors, image_vectors, w);
}

void to_json(json& j, const SentenceImage& s) {
  j = {{"sentence_index", s.sentence_index}, {"artifact_id", s.artifact_id}, {"prompt_text", s.prompt_text}};
  j["reference_artifact_id"] = s.reference_artifact_id ? json(*s.reference_artifact_id) : json(nullptr);
}

void from_json(const json& j, SentenceImage& s) {
  s.sentence_index = j.at("sentence_index").get<int>();
  s.artifact_id = j.at("artifact_id").get<std::string>();
  s.prompt_text = j.at("prompt_text").get<std::string>();
  const auto& ref = j.at("reference_artifact_id");
  s.reference_artifact_id = ref.is_null() ? std::nullopt : std::optional<std::string>(ref.get<std::string>());
}

void to_json(json& j, const SelectionEntry& e) {
  j = {{"segment_index", e.segment_index},
       {"sentence_index", e.sentence_index},
       {"artifact_id", e.artifact_id},
       {"clip_s", e.clip_s},
       {"segment_truncated", e.segment_truncated}};
}

void from_json(const json& j, SelectionEntry& e) {
  e.segment_index = j.at("segment_index").get<int>();
  e.sentence_index = j.at("sentence_index").get<int>();
  e.artifact_id = j.at("artifact_id").get<std::string>();
  e.clip_s = j.at("clip_s").get<double>();
  e.segment_truncated = j.value("segment_truncated", false);
}

void to_json(json& j, const Segment& s) {
  j = {{"index", s.index},
       {"first_sentence", s.first_sentence},
       {"last_sentence", s.last_sentence},
       {"text", s.text},
       {"full_token_count", s.full_token_count},
       {"embed_text", s.embed_text},
       {"token_count", s.token_count},
       {"truncated", s.truncated}};
}

void from_json(const json& j, Segment& s) {
  s.index = j.at("index").get<int>();
  s.first_sentence = j.at("first_sentence").get<int>();
  s.last_sentence = j.at("last_sentence").get<int>();
  s.text = j.at("text").get<std::string>();
  s.full_token_count = j.at("full_token_count").get<std::size_t>();
  s.embed_text = j.at("embed_text").get<std::string>();
  s.token_count = j.at("token_count").get<std::size_t>();
  s.truncated = j.at("truncated").get<bool>();
}

}  // namespace genread
