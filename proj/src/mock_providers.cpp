#include "genread/mock_providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <json.hpp>
#include <regex>
#include <set>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {
namespace {

using nlohmann::json;

const std::vector<std::string> kNames = {"Luna", "Milo",  "Pip",  "Hazel", "Rowan", "Juniper",
                                         "Clover", "Fern", "Otto", "Nova",  "Iris",  "Bramble"};
const std::vector<std::string> kAnimals = {"rabbit",   "fox",   "owl",      "badger", "hedgehog",
                                           "otter",    "deer",  "squirrel", "mouse",  "turtle"};
const std::vector<std::string> kColors = {"silver", "golden", "crimson", "emerald", "amber", "violet"};
const std::vector<std::string> kItems = {"acorns", "lanterns", "pebbles", "feathers", "shells", "stars"};

struct GenreWords {
  std::vector<std::string> places;
  std::vector<std::string> objects;
};

GenreWords genre_words(const std::string& genre) {
  if (genre == "sf" || genre == "science fiction" || genre == "scifi") {
    return {{"Nebula Station", "Orion Harbor", "Comet Valley"}, {"star compass", "signal crystal", "orbit key"}};
  }
  if (genre == "adventure") {
    return {{"Thunder Ridge", "Lost Canyon", "Misty Peaks"}, {"ancient map", "bronze key", "hidden crown"}};
  }
  return {{"Whispering Woods", "Silver Lake", "Maple Hollow"}, {"moon lantern", "river stone", "song shell"}};
}

// Story skeleton read in order; {H}/{F} hero and friend names, {HA}/{FA}
// their animals, {P} place, {O} object, {C} color, {N} small number, {T} items.
const std::vector<std::string> kStoryTemplates = {
    "Once upon a time, {H} the {HA} lived at the edge of {P}.",
    "Every morning, {H} counted {N} {T} along the winding path.",
    "{H} often wondered what secrets {P} was hiding.",
    "One day, {F} the {FA} arrived with news about a {C} {O}.",
    "\"We have to find it before sunset,\" said {F}.",
    "{H} packed {N} {T} and a small lantern for the trip.",
    "The two friends walked past tall trees and quiet streams.",
    "Along the way, they met an old heron named Sage.",
    "Sage told them that the {O} had been lost for {N} winters.",
    "{H} noticed strange marks on the {C} stone near the water.",
    "The wind carried the smell of rain across {P}.",
    "{F} laughed and said that courage grows with every step.",
    "They crossed a narrow bridge while {N} birds watched from above.",
    "At noon, the friends shared a meal of berries and seeds.",
    "{H} remembered an old song about the {C} {O}.",
    "The path grew steep, and {H} had to climb carefully.",
    "Suddenly, the ground trembled beneath their feet!",
    "{F} found a hidden door covered in soft green moss.",
    "Behind the door was a tunnel lit by {N} glowing crystals.",
    "{H} felt nervous but kept going anyway.",
    "The tunnel opened into a wide hall with {N} stone pillars.",
    "In the center of the hall rested the {C} {O}.",
    "{H} reached out and touched it very gently.",
    "A warm light spread through the hall and across {P}.",
    "The friends realized the {O} could help everyone at home.",
    "They carried it back before the moon rose over the hills.",
    "The neighbors gathered to see what {H} had found.",
    "{F} told everyone how brave {H} had been that day.",
    "From that day on, {H} the {HA} was known as the keeper of the {O}.",
    "Every spring, the friends returned to {P} to remember their journey.",
};

const std::vector<std::string> kStyleNotes = {
    "soft watercolor textures", "warm storybook palette", "gentle ink outlines",
    "pastel colors",            "paper-cut collage look", "dreamy soft lighting",
    "bold flat shapes",         "detailed pencil shading"};

const std::vector<std::string> kFalseSentences = {
    "The friends built a boat out of paper and sailed to the sea.",
    "A giant whale sang a song to the sleeping village.",
    "Everyone went to the city market to buy new shoes.",
    "The king of the mountains held a dance in the snow.",
    "A robot taught the children how to bake bread.",
    "The storm destroyed every tree in the valley."};

const std::set<std::string> kCapitalStopwords = {
    "A", "An", "The", "Then", "When", "After", "Before", "Every", "Each", "One", "Once",
    "From", "At", "In", "On", "Along", "Behind", "Suddenly", "They", "We", "He", "She",
    "It", "This", "That", "There", "But", "And", "As", "If", "So", "Soon"};

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::optional<std::string> preference_value(const TextGenRequest& req, const std::string& key) {
  const std::string prefix = key + ":";
  for (const auto& p : req.preferences) {
    if (p.rfind(prefix, 0) == 0) {
      auto v = trim(std::string_view(p).substr(prefix.size()));
      if (!v.empty()) return v;
    }
  }
  return std::nullopt;
}

std::string cut_to_words(const std::string& text, int n) {
  auto words = split_words(text);
  std::string out;
  for (int i = 0; i < n && i < static_cast<int>(words.size()); ++i) {
    if (i) out += ' ';
    out += words[static_cast<std::size_t>(i)];
  }
  return out;
}

// Pads or cuts to exactly n words and closes with a period.
std::string exact_words(const std::string& text, int n, SeededRng& rng) {
  auto words = split_words(text);
  while (static_cast<int>(words.size()) < n) words.push_back(rng.pick(kItems));
  words.resize(static_cast<std::size_t>(n));
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  while (!out.empty() && std::ispunct(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out + ".";
}

std::vector<std::string> rough_sentences(const std::string& text) {
  static const std::regex re(R"([^.!?]+[.!?]+["']?)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    auto s = trim(it->str());
    if (!s.empty()) out.push_back(s);
  }
  if (out.empty() && !trim(text).empty()) out.push_back(trim(text));
  return out;
}

struct Character {
  std::string name;
  std::string descriptor;
};

std::vector<Character> find_characters(const std::string& text) {
  static const std::regex re(R"(\b([A-Z][a-z]+) the ([a-z]+)\b)");
  std::vector<Character> out;
  std::set<std::string> seen;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1];
    if (kCapitalStopwords.count(name) || seen.count(name)) continue;
    seen.insert(name);
    out.push_back({name, (*it)[2]});
  }
  return out;
}

// Capitalized word runs that are not sentence-initial, not characters.
std::vector<std::string> find_incidental(const std::string& text, const std::vector<Character>& chars) {
  std::set<std::string> char_names;
  for (const auto& c : chars) char_names.insert(c.name);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& sentence : rough_sentences(text)) {
    auto words = split_words(sentence);
    std::string run;
    auto flush = [&] {
      if (!run.empty() && !seen.count(run) && !char_names.count(run)) {
        seen.insert(run);
        out.push_back(run);
      }
      run.clear();
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
      std::string w = words[i];
      bool trailing_punct = false;
      while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) {
        w.pop_back();
        trailing_punct = true;
      }
      while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.erase(w.begin());
      const bool capital = !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
      if (i > 0 && capital && !kCapitalStopwords.count(w)) {
        run = run.empty() ? w : run + " " + w;
      } else {
        flush();
      }
      if (trailing_punct) flush();
    }
    flush();
  }
  return out;
}

std::string mock_story(const TextGenRequest& req, SeededRng& rng, const MockTextOptions& opts) {
  const std::string genre = lower(preference_value(req, "Preferred genre").value_or(""));
  const auto words = genre_words(genre);
  const std::string hero = rng.pick(kNames);
  std::string friend_name = rng.pick(kNames);
  while (friend_name == hero) friend_name = rng.pick(kNames);
  const std::string hero_animal = lower(preference_value(req, "Preferred animal").value_or(rng.pick(kAnimals)));
  std::string friend_animal = rng.pick(kAnimals);
  while (friend_animal == hero_animal) friend_animal = rng.pick(kAnimals);
  const std::string place = rng.pick(words.places);
  const std::string object = rng.pick(words.objects);

  const int target = req.target_words.value_or(std::min(req.max_output_words, 500));
  std::string body;
  int count = 0;
  for (std::size_t i = 0; count < target; ++i) {
    const auto& tpl = kStoryTemplates[i % kStoryTemplates.size()];
    // After the first pass, skip some templates so repeats vary.
    if (i >= kStoryTemplates.size() && i % kStoryTemplates.size() != 0 && rng.uniform() < 0.3) continue;
    std::string s = tpl;
    s = replace_all(s, "{HA}", hero_animal);
    s = replace_all(s, "{FA}", friend_animal);
    s = replace_all(s, "{H}", hero);
    s = replace_all(s, "{F}", friend_name);
    s = replace_all(s, "{P}", place);
    s = replace_all(s, "{O}", object);
    s = replace_all(s, "{C}", rng.pick(kColors));
    s = replace_all(s, "{T}", rng.pick(kItems));
    s = replace_all(s, "{N}", std::to_string(rng.between(2, 12)));
    if (!body.empty()) body += (i % 6 == 5) ? "\n\n" : " ";
    body += s;
    count += static_cast<int>(word_count(s));
  }
  if (opts.forced_word_count) body = exact_words(body, *opts.forced_word_count, rng);

  json out;
  out["title"] = hero + " and the " + capitalize(object);
  out["body"] = body;
  return out.dump();
}

std::string mock_summary(const TextGenRequest& req, SeededRng& rng, const MockTextOptions& opts) {
  const int target = opts.forced_word_count.value_or(req.target_words.value_or(50));
  const auto sentences = rough_sentences(req.context);
  std::string pool;
  if (!sentences.empty()) {
    const std::size_t stride = std::max<std::size_t>(1, sentences.size() / 6);
    for (std::size_t i = 0; i < sentences.size(); i += stride) pool += sentences[i] + " ";
  }
  if (pool.rfind("Once ", 0) == 0) pool[0] = 'o';
  return exact_words("In this story, " + pool, target, rng);
}

std::string mock_metadata(const TextGenRequest& req, SeededRng& rng) {
  const auto characters = find_characters(req.context);
  json out;
  out["characters"] = json::array();
  for (const auto& c : characters) out["characters"].push_back({{"name", c.name}, {"descriptor", c.descriptor}});
  out["incidental_entities"] = find_incidental(req.context, characters);
  std::vector<std::string> style = kStyleNotes;
  std::vector<std::string> chosen;
  for (int i = 0; i < 3; ++i) {
    auto idx = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(style.size()) - 1));
    chosen.push_back(style[idx]);
    style.erase(style.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  out["style_descriptors"] = chosen;
  return out.dump();
}

struct DraftQuestion {
  std::string stem;
  std::string answer;
  std::vector<std::string> distractors;
  std::string focus;
};

std::vector<std::string> distinct_distractors(const std::string& answer, std::vector<std::string> pool,
                                              SeededRng& rng, std::size_t n = 3) {
  std::vector<std::string> out;
  while (out.size() < n && !pool.empty()) {
    auto idx = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(pool.size()) - 1));
    const auto candidate = pool[idx];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
    if (candidate != answer && std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(candidate);
  }
  return out;
}

std::string mock_questions(const TextGenRequest& req, SeededRng& rng) {
  const std::string& story = req.context;
  const auto characters = find_characters(story);
  const auto incidental = find_incidental(story, characters);
  const auto sentences = rough_sentences(story);

  std::vector<DraftQuestion> numeric, proper, comprehension, synthesis;

  static const std::regex number_re(R"(\b(\d+) ([a-z]+)\b)");
  std::map<std::string, int> prefix_uses;
  for (const auto& s : sentences) ++prefix_uses[cut_to_words(s, 4)];
  std::set<std::string> used_nouns;
  for (const auto& s : sentences) {
    if (prefix_uses[cut_to_words(s, 4)] > 1) continue;
    std::smatch m;
    if (!std::regex_search(s, m, number_re)) continue;
    const std::string noun = m[2];
    if (used_nouns.count(noun)) continue;
    used_nouns.insert(noun);
    const int n = std::stoi(m[1]);
    std::vector<std::string> pool;
    for (int d = -3; d <= 4; ++d) {
      if (d != 0 && n + d >= 0) pool.push_back(std::to_string(n + d));
    }
    numeric.push_back({"In the sentence beginning \"" + cut_to_words(s, 4) + "\", how many " + noun +
                           " are mentioned?",
                       std::to_string(n), distinct_distractors(std::to_string(n), pool, rng), "numeric"});
  }

  std::vector<std::string> name_pool = kNames;
  for (const auto& c : characters) {
    proper.push_back({"What is the name of the " + c.descriptor + " in the story?", c.name,
                      distinct_distractors(c.name, name_pool, rng), "proper_noun"});
  }
  for (const auto& place : incidental) {
    std::vector<std::string> pool = {"Whispering Woods", "Silver Lake", "Maple Hollow", "Thunder Ridge",
                                     "Lost Canyon",      "Misty Peaks", "Nebula Station", "Orion Harbor"};
    pool.erase(std::remove(pool.begin(), pool.end(), place), pool.end());
    proper.push_back({"Which of these names appears in the story?", place,
                      distinct_distractors(place, pool, rng), "proper_noun"});
  }

  for (std::size_t i = 0; i < sentences.size(); i += std::max<std::size_t>(1, sentences.size() / 4)) {
    const auto fragment = cut_to_words(sentences[i], 10);
    std::vector<std::string> pool;
    for (const auto& f : kFalseSentences) pool.push_back(cut_to_words(f, 10));
    comprehension.push_back({"Which of the following statements appears in the story?", fragment,
                             distinct_distractors(fragment, pool, rng), "comprehension"});
  }

  const std::string hero = characters.empty() ? "the main character" : characters.front().name;
  synthesis.push_back({"What is the main theme of the story?", "Courage and friendship",
                       {"Winning a race", "Learning to cook", "Moving to a big city"}, "synthesis"});
  synthesis.push_back({"How does " + hero + " change by the end of the story?",
                       "They become brave and trusted by others",
                       {"They decide to leave home forever", "They forget their friends",
                        "They become afraid of the forest"},
                       "synthesis"});
  synthesis.push_back({"Why was the journey important to the community?", "It brought back something that helps everyone",
                       {"It ended a long war", "It made the travelers rich", "It was only a dream"},
                       "synthesis"});

  // Round-robin across focus categories until ten questions are drafted.
  std::vector<std::vector<DraftQuestion>*> buckets = {&numeric, &proper, &comprehension, &synthesis};
  std::vector<std::size_t> cursor(buckets.size(), 0);
  std::vector<DraftQuestion> chosen;
  std::set<std::string> seen_stems;
  bool progress = true;
  while (chosen.size() < 10 && progress) {
    progress = false;
    for (std::size_t b = 0; b < buckets.size() && chosen.size() < 10; ++b) {
      auto& bucket = *buckets[b];
      while (cursor[b] < bucket.size()) {
        const auto& q = bucket[cursor[b]++];
        if (q.distractors.size() < 3) continue;
        const auto key = q.stem + "|" + q.answer;
        if (seen_stems.count(key)) continue;
        seen_stems.insert(key);
        chosen.push_back(q);
        progress = true;
        break;
      }
    }
  }

  json out;
  out["questions"] = json::array();
  int index = 1;
  for (const auto& q : chosen) {
    std::vector<std::string> options = q.distractors;
    const auto pos = static_cast<std::size_t>(rng.between(0, 3));
    options.insert(options.begin() + static_cast<std::ptrdiff_t>(pos), q.answer);
    out["questions"].push_back({{"index", index++},
                                {"format", "multiple_choice"},
                                {"stem", q.stem},
                                {"options", options},
                                {"correct_option", pos},
                                {"focus", q.focus}});
  }
  return out.dump();
}

}  // namespace

std::string MockTextProvider::generate_text(const TextGenRequest& req) {
  req.validate();
  const std::uint64_t seed = req.seed.value_or(options_.seed);
  SeededRng rng(fnv1a64(req.render_prompt()) ^ (seed * 0x9E3779B97F4A7C15ULL));
  switch (req.task) {
    case TextTask::Story: return mock_story(req, rng, options_);
    case TextTask::Summary: return mock_summary(req, rng, options_);
    case TextTask::Metadata: return mock_metadata(req, rng);
    case TextTask::Questions: return mock_questions(req, rng);
    case TextTask::Freeform: break;
  }
  std::string out = "Mock response to: " + cut_to_words(req.instruction, 12);
  out += " (" + hex64(rng.next()) + ")";
  if (options_.forced_word_count) out = exact_words(out, *options_.forced_word_count, rng);
  return out;
}

ImageArtifact MockImageProvider::generate_image(const ImageGenRequest& req) {
  req.validate();
  if (req.reference_image && !store_.contains(*req.reference_image)) {
    fail(ErrorCode::ReferenceNotFound, "reference image not found: " + *req.reference_image);
  }
  const std::uint64_t seed = req.seed.value_or(seed_);
  const std::uint64_t content_key = fnv1a64(req.prompt_text, fnv1a64(std::to_string(seed)));

  constexpr int kSide = 32;
  ImageArtifact art;
  art.media_type = "image/x-portable-pixmap";
  art.width_px = kSide;
  art.height_px = kSide;
  const std::string header = "P6\n" + std::to_string(kSide) + " " + std::to_string(kSide) + "\n255\n";
  art.bytes.assign(header.begin(), header.end());
  SeededRng rng(content_key);
  const auto base_r = rng.between(0, 255), base_g = rng.between(0, 255), base_b = rng.between(0, 255);
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      art.bytes.push_back(static_cast<std::uint8_t>((base_r + x * 4) & 0xff));
      art.bytes.push_back(static_cast<std::uint8_t>((base_g + y * 4) & 0xff));
      art.bytes.push_back(static_cast<std::uint8_t>((base_b + (x ^ y) * 2 + rng.between(0, 15)) & 0xff));
    }
  }

  std::string id_key = req.prompt_text + '\x1f' + std::to_string(seed) + '\x1f' + req.reference_image.value_or("");
  art.id = "img-" + hex64(fnv1a64(id_key));
  store_.put(art);
  return art;
}

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dims, std::size_t token_budget, std::uint64_t seed)
    : dims_(dims), token_budget_(token_budget), seed_(seed) {
  require(dims_ > 0, "mock embedder: dims must be positive");
  require(token_budget_ > 0, "mock embedder: token budget must be positive");
}

EmbeddingVector MockEmbeddingProvider::direction(std::uint64_t key) const {
  SeededRng rng(key ^ (seed_ * 0x9E3779B97F4A7C15ULL));
  std::vector<double> v(dims_);
  double s = 0.0;
  for (double& x : v) {
    x = rng.normal();
    s += x * x;
  }
  const double n = std::sqrt(s);
  for (double& x : v) x /= n;
  return EmbeddingVector(std::move(v));
}

EmbeddingVector MockEmbeddingProvider::embed_text(const std::string& text) {
  require(!trim(text).empty(), "embed_text: empty input");
  const auto tokens = count_tokens(text);
  if (tokens > token_budget_) {
    fail(ErrorCode::InputTooLong, "embed_text: " + std::to_string(tokens) + " tokens exceeds budget of " +
                                      std::to_string(token_budget_));
  }
  return direction(fnv1a64(text, fnv1a64("text")));
}

EmbeddingVector MockEmbeddingProvider::embed_image(const ImageArtifact& image) {
  image.validate();
  std::string_view raw(reinterpret_cast<const char*>(image.bytes.data()), image.bytes.size());
  return direction(fnv1a64(raw, fnv1a64("image")));
}

void ScriptedTextProvider::push(std::string response) {
  std::lock_guard lock(mu_);
  responses_.push_back(std::move(response));
}

std::string ScriptedTextProvider::generate_text(const TextGenRequest& req) {
  req.validate();
  std::lock_guard lock(mu_);
  ++calls_;
  if (responses_.empty()) fail(ErrorCode::ProviderUnavailable, "scripted provider exhausted");
  auto out = std::move(responses_.front());
  responses_.pop_front();
  if (trim(out).empty()) fail(ErrorCode::EmptyResponse, "scripted provider returned empty text");
  return out;
}

int ScriptedTextProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace genread
