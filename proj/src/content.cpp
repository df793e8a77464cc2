#include "genread/content.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {
namespace {

using nlohmann::json;

constexpr double kBandEps = 1e-9;

const std::set<std::string> kAbbreviations = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "vs", "etc", "e.g", "i.e",
    "capt", "gen", "lt", "col", "sgt", "no", "fig", "approx", "dept", "est", "inc", "ltd"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

// True when the period at `dot` closes a known abbreviation or an initial.
bool abbreviation_before(std::string_view body, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(body[b - 1]) && !is_opener(body[b - 1])) --b;
  std::string word(body.substr(b, dot - b));
  if (word.size() == 1 && is_upper(word[0])) return true;
  for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return kAbbreviations.count(word) != 0;
}

// Extracts the outermost JSON object from a response that may carry code
// fences or chatter around it.
json parse_json_object(std::string_view text, const std::string& what) {
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    fail(ErrorCode::MalformedInput, what + ": response holds no JSON object");
  }
  try {
    return json::parse(text.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedInput, what + ": " + e.what());
  }
}

std::string band_clause(const std::string& noun, const WordBand& band) {
  std::ostringstream out;
  out << "The " << noun << " must be approximately " << band.target << " words long (between " << band.lower()
      << " and " << band.upper() << " words).";
  return out.str();
}

// Runs `attempt` up to 1 + retries times. Provider outages propagate
// immediately; every other failure is recorded and retried.
template <typename T, typename Attempt>
T with_retries(const RetryPolicy& policy, const std::string& stage, Attempt&& attempt) {
  require(policy.retries >= 0, stage + ": retries must be >= 0");
  std::vector<std::string> reasons;
  for (int i = 0; i <= policy.retries; ++i) {
    try {
      return attempt(policy.seed + static_cast<std::uint64_t>(i));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProviderUnavailable || e.code() == ErrorCode::PreconditionViolated) throw;
      reasons.push_back(e.what());
    }
  }
  std::string msg = stage + ": constraint unsatisfied after " + std::to_string(reasons.size()) + " attempts";
  for (std::size_t i = 0; i < reasons.size(); ++i) msg += "; attempt " + std::to_string(i + 1) + ": " + reasons[i];
  fail(ErrorCode::ConstraintUnsatisfied, msg);
}

bool contains_word(std::string_view text, std::string_view word) {
  std::size_t pos = 0;
  while ((pos = text.find(word, pos)) != std::string_view::npos) {
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    const auto end = pos + word.size();
    const bool right_ok = end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
    if (left_ok && right_ok) return true;
    pos = end;
  }
  return false;
}

}  // namespace

std::vector<std::string> PreferenceSpec::clauses() const {
  std::vector<std::string> out;
  if (genre) out.push_back("Preferred genre: " + *genre);
  if (animal) out.push_back("Preferred animal: " + *animal);
  if (favorite_title) out.push_back("Favorite story title: " + *favorite_title);
  return out;
}

int WordBand::lower() const {
  return static_cast<int>(std::ceil(target - tolerance * target - kBandEps));
}

int WordBand::upper() const {
  return static_cast<int>(std::floor(target + tolerance * target + kBandEps));
}

bool WordBand::contains(std::size_t words) const {
  const auto n = static_cast<long long>(words);
  return n >= lower() && n <= upper();
}

std::vector<Sentence> segment_sentences(std::string_view body) {
  require(!body.empty(), "segment_sentences: body must be non-empty");
  std::vector<Sentence> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    Sentence s;
    s.index = static_cast<int>(out.size());
    s.begin = start;
    s.end = end;
    s.text = trim(body.substr(start, end - start));
    out.push_back(std::move(s));
    start = end;
  };

  std::size_t i = 0;
  while (i < body.size()) {
    if (!is_terminator(body[i])) {
      ++i;
      continue;
    }
    const std::size_t term = i;
    std::size_t q = i + 1;
    while (q < body.size() && (is_terminator(body[q]) || is_closer(body[q]))) ++q;
    std::size_t r = q;
    while (r < body.size() && is_space(body[r])) ++r;
    const bool at_end = r == body.size();
    const bool had_space = r > q;
    bool next_upper = false;
    if (!at_end && had_space) {
      next_upper = is_upper(body[r]) || (is_opener(body[r]) && r + 1 < body.size() && is_upper(body[r + 1]));
    }
    const bool abbreviated = body[term] == '.' && q == term + 1 && abbreviation_before(body, term);
    if (at_end) break;
    if (next_upper && !abbreviated) emit(r);
    i = q;
  }
  if (start < body.size() || out.empty()) emit(body.size());
  return out;
}

Story make_story(std::string title, std::string body) {
  Story s;
  s.title = trim(title);
  s.body = std::move(body);
  s.word_count = word_count(s.body);
  s.sentences = segment_sentences(s.body);
  s.id = "story-" + hex64(fnv1a64(s.title + '\x1f' + s.body)).substr(0, 12);
  return s;
}

void Story::validate(std::optional<WordBand> band) const {
  auto invalid = [&](const std::string& m) { fail(ErrorCode::ValidationFailed, "story " + id + ": " + m); };
  if (id.empty()) invalid("empty id");
  if (trim(body).empty()) invalid("empty body");
  if (sentences.empty()) invalid("no sentences");
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (s.index != static_cast<int>(i)) invalid("sentence indices not consecutive at " + std::to_string(i));
    if (s.begin != cursor || s.end < s.begin || s.end > body.size()) invalid("sentence spans do not tile the body");
    if (s.text != trim(std::string_view(body).substr(s.begin, s.end - s.begin))) {
      invalid("sentence " + std::to_string(i) + " text does not match its span");
    }
    cursor = s.end;
  }
  if (cursor != body.size()) invalid("sentence spans do not reach the end of the body");
  if (word_count != genread::word_count(body)) invalid("word_count does not match body");
  if (band && !band->contains(word_count)) {
    invalid("word count " + std::to_string(word_count) + " outside [" + std::to_string(band->lower()) + ", " +
            std::to_string(band->upper()) + "]");
  }
}

void StoryMetadata::validate() const {
  std::set<std::string> names;
  for (const auto& c : characters) {
    if (trim(c.name).empty()) fail(ErrorCode::ValidationFailed, "metadata: character with empty name");
    names.insert(c.name);
  }
  for (const auto& [idx, mentions] : per_sentence_entities) {
    for (const auto& m : mentions) {
      if (!m.incidental && !names.count(m.name)) {
        fail(ErrorCode::ValidationFailed,
             "metadata: sentence " + std::to_string(idx) + " entity '" + m.name + "' is neither a character nor incidental");
      }
    }
  }
}

void Summary::validate(std::optional<WordBand> band) const {
  if (trim(text).empty()) fail(ErrorCode::ValidationFailed, "summary: empty text");
  if (word_count != genread::word_count(text)) fail(ErrorCode::ValidationFailed, "summary: word_count mismatch");
  if (band && !band->contains(word_count)) {
    fail(ErrorCode::ValidationFailed, "summary: word count " + std::to_string(word_count) + " outside [" +
                                          std::to_string(band->lower()) + ", " + std::to_string(band->upper()) + "]");
  }
}

void Question::validate() const {
  const std::string where = "question " + std::to_string(index);
  if (index < 1 || index > static_cast<int>(kQuestionsPerSet)) fail(ErrorCode::ValidationFailed, where + ": index out of range");
  if (trim(stem).empty()) fail(ErrorCode::ValidationFailed, where + ": empty stem");
  if (correct_option < 0 || correct_option > 3) fail(ErrorCode::ValidationFailed, where + ": correct_option out of range");
  for (std::size_t a = 0; a < options.size(); ++a) {
    if (trim(options[a]).empty()) fail(ErrorCode::ValidationFailed, where + ": empty option");
    for (std::size_t b = a + 1; b < options.size(); ++b) {
      if (options[a] == options[b]) fail(ErrorCode::ValidationFailed, where + ": duplicate options");
    }
  }
}

void QuestionSet::validate() const {
  if (questions.size() != kQuestionsPerSet) {
    fail(ErrorCode::ValidationFailed, "question set: expected 10 questions, got " + std::to_string(questions.size()));
  }
  std::set<int> seen;
  for (const auto& q : questions) {
    q.validate();
    if (!seen.insert(q.index).second) fail(ErrorCode::ValidationFailed, "question set: duplicate index " + std::to_string(q.index));
  }
}

std::size_t QuestionSet::distinct_focus_count() const {
  std::set<QuestionFocus> foci;
  for (const auto& q : questions) foci.insert(q.focus);
  return foci.size();
}

std::string_view to_string(QuestionFocus focus) {
  switch (focus) {
    case QuestionFocus::Numeric: return "numeric";
    case QuestionFocus::ProperNoun: return "proper_noun";
    case QuestionFocus::Comprehension: return "comprehension";
    case QuestionFocus::Synthesis: return "synthesis";
  }
  return "comprehension";
}

std::string_view to_string(QuestionFormat format) {
  switch (format) {
    case QuestionFormat::MultipleChoice: return "multiple_choice";
    case QuestionFormat::OpenEnded: return "open_ended";
    case QuestionFormat::FillInTheBlank: return "fill_in_the_blank";
  }
  return "multiple_choice";
}

QuestionFocus focus_from_string(std::string_view s) {
  if (s == "numeric") return QuestionFocus::Numeric;
  if (s == "proper_noun") return QuestionFocus::ProperNoun;
  if (s == "comprehension") return QuestionFocus::Comprehension;
  if (s == "synthesis") return QuestionFocus::Synthesis;
  fail(ErrorCode::MalformedInput, "unknown question focus '" + std::string(s) + "'");
}

QuestionFormat format_from_string(std::string_view s) {
  if (s == "multiple_choice") return QuestionFormat::MultipleChoice;
  if (s == "open_ended") return QuestionFormat::OpenEnded;
  if (s == "fill_in_the_blank") return QuestionFormat::FillInTheBlank;
  fail(ErrorCode::MalformedInput, "unknown question format '" + std::string(s) + "'");
}

// --- generation -------------------------------------------------------------

Story generate_story(const PreferenceSpec& prefs, int target_words, double tolerance, TextProvider& provider,
                     const RetryPolicy& policy) {
  require(target_words >= 50, "generate_story: target_words must be >= 50");
  require(tolerance > 0.0 && tolerance < 1.0, "generate_story: tolerance must be in (0, 1)");
  const WordBand band{target_words, tolerance};

  return with_retries<Story>(policy, "story generation", [&](std::uint64_t seed) {
    TextGenRequest req;
    req.task = TextTask::Story;
    req.instruction = "Write a story for young readers with a clear beginning, middle and end.";
    req.constraints = {band_clause("story", band),
                       "The story must be completely original, with no prior existence in any form.",
                       "Write in English.",
                       "Respond with a JSON object with string fields \"title\" and \"body\"."};
    req.preferences = prefs.clauses();
    req.max_output_words = band.upper();
    req.target_words = target_words;
    req.seed = seed;

    const auto doc = parse_json_object(provider.generate_text(req), "story response");
    if (!doc.contains("title") || !doc.contains("body") || !doc["title"].is_string() || !doc["body"].is_string()) {
      fail(ErrorCode::MalformedInput, "story response: missing string fields title/body");
    }
    const auto body = trim(doc["body"].get<std::string>());
    if (body.empty()) fail(ErrorCode::EmptyResponse, "story response: empty body");
    auto story = make_story(doc["title"].get<std::string>(), body);
    story.validate(band);
    return story;
  });
}

StoryMetadata extract_story_metadata(const Story& story, TextProvider& provider, const RetryPolicy& policy) {
  story.validate();
  return with_retries<StoryMetadata>(policy, "metadata extraction", [&](std::uint64_t seed) {
    TextGenRequest req;
    req.task = TextTask::Metadata;
    req.instruction =
        "Run a morphological and dependency analysis of the story below. List every named character with a "
        "short descriptor (the noun it is attached to), any other named entities, and visual style descriptors "
        "that keep illustrations consistent.";
    req.constraints = {
        "Respond with a JSON object: {\"characters\": [{\"name\", \"descriptor\"}], "
        "\"incidental_entities\": [string], \"style_descriptors\": [string]}."};
    req.context = story.body;
    req.max_output_words = 400;
    req.seed = seed;

    const auto doc = parse_json_object(provider.generate_text(req), "metadata response");
    StoryMetadata meta;
    std::vector<std::string> incidental;
    try {
      for (const auto& c : doc.value("characters", json::array())) {
        CharacterRef ref{trim(c.at("name").get<std::string>()), trim(c.value("descriptor", std::string()))};
        if (ref.name.empty()) continue;
        const bool dup = std::any_of(meta.characters.begin(), meta.characters.end(),
                                     [&](const CharacterRef& r) { return r.name == ref.name; });
        if (!dup) meta.characters.push_back(std::move(ref));
      }
      for (const auto& s : doc.value("style_descriptors", json::array())) meta.style_descriptors.push_back(s.get<std::string>());
      for (const auto& s : doc.value("incidental_entities", json::array())) incidental.push_back(s.get<std::string>());
    } catch (const json::exception& e) {
      fail(ErrorCode::MalformedInput, std::string("metadata response: ") + e.what());
    }

    for (const auto& sentence : story.sentences) {
      std::vector<EntityMention> mentions;
      for (const auto& c : meta.characters) {
        if (contains_word(sentence.text, c.name)) mentions.push_back({c.name, false});
      }
      for (const auto& e : incidental) {
        const bool is_character = std::any_of(meta.characters.begin(), meta.characters.end(),
                                              [&](const CharacterRef& r) { return r.name == e; });
        if (!is_character && !trim(e).empty() && contains_word(sentence.text, e)) mentions.push_back({e, true});
      }
      if (!mentions.empty()) meta.per_sentence_entities[sentence.index] = std::move(mentions);
    }
    meta.validate();
    return meta;
  });
}

Summary generate_summary(const Story& story, int target_words, double tolerance, TextProvider& provider,
                         const RetryPolicy& policy) {
  require(target_words >= 1, "generate_summary: target_words must be >= 1");
  require(tolerance > 0.0 && tolerance < 1.0, "generate_summary: tolerance must be in (0, 1)");
  story.validate();
  const WordBand band{target_words, tolerance};

  return with_retries<Summary>(policy, "summary generation", [&](std::uint64_t seed) {
    TextGenRequest req;
    req.task = TextTask::Summary;
    req.instruction = "Summarize the story below so a reader can grasp its overall storyline and conclusion.";
    req.constraints = {band_clause("summary", band), "Respond with the summary text only."};
    req.context = story.body;
    req.max_output_words = band.upper();
    req.target_words = target_words;
    req.seed = seed;

    Summary summary;
    summary.story_id = story.id;
    summary.text = trim(provider.generate_text(req));
    summary.word_count = word_count(summary.text);
    summary.validate(band);
    return summary;
  });
}

QuestionSet parse_question_set(std::string_view text, const std::string& story_id) {
  const auto doc = parse_json_object(text, "questions response");
  QuestionSet set;
  set.story_id = story_id;
  try {
    for (const auto& item : doc.at("questions")) set.questions.push_back(item.get<Question>());
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedInput, std::string("questions response: ") + e.what());
  }
  std::sort(set.questions.begin(), set.questions.end(),
            [](const Question& a, const Question& b) { return a.index < b.index; });
  set.validate();
  return set;
}

QuestionSet generate_questions(const Story& story, TextProvider& provider, const RetryPolicy& policy) {
  story.validate();
  return with_retries<QuestionSet>(policy, "question generation", [&](std::uint64_t seed) {
    TextGenRequest req;
    req.task = TextTask::Questions;
    req.instruction =
        "Write reading-comprehension questions about the story below that assess comprehension, memorization "
        "and synthesis.";
    req.constraints = {
        "Generate exactly 10 questions numbered 1 to 10.",
        "Each question has exactly 4 pairwise distinct options and exactly one correct option.",
        "Cover at least three focus areas among numeric details, proper nouns, narrative comprehension and "
        "synthesis.",
        "Respond with a JSON object: {\"questions\": [{\"index\", \"format\", \"stem\", \"options\", "
        "\"correct_option\" (0-3), \"focus\" (numeric|proper_noun|comprehension|synthesis)}]}."};
    req.preferences = {"Question format: multiple_choice"};
    req.context = story.body;
    req.max_output_words = 1500;
    req.seed = seed;

    auto set = parse_question_set(provider.generate_text(req), story.id);
    for (const auto& q : set.questions) {
      if (q.format != QuestionFormat::MultipleChoice) {
        fail(ErrorCode::ValidationFailed, "question " + std::to_string(q.index) + " is not multiple choice");
      }
    }
    if (set.distinct_focus_count() < 3) {
      fail(ErrorCode::ValidationFailed, "question set spans fewer than three focus categories");
    }
    return set;
  });
}

// --- JSON -------------------------------------------------------------------

void to_json(json& j, const Story& s) {
  json sentences = json::array();
  for (const auto& x : s.sentences) {
    sentences.push_back({{"index", x.index}, {"text", x.text}, {"begin", x.begin}, {"end", x.end}});
  }
  j = {{"id", s.id}, {"title", s.title}, {"body", s.body}, {"word_count", s.word_count}, {"sentences", sentences}};
}

void from_json(const json& j, Story& s) {
  s.id = j.at("id").get<std::string>();
  s.title = j.at("title").get<std::string>();
  s.body = j.at("body").get<std::string>();
  s.word_count = j.at("word_count").get<std::size_t>();
  s.sentences.clear();
  for (const auto& x : j.at("sentences")) {
    s.sentences.push_back({x.at("index").get<int>(), x.at("text").get<std::string>(), x.at("begin").get<std::size_t>(),
                           x.at("end").get<std::size_t>()});
  }
}

void to_json(json& j, const StoryMetadata& m) {
  json characters = json::array();
  for (const auto& c : m.characters) characters.push_back({{"name", c.name}, {"descriptor", c.descriptor}});
  json per_sentence = json::object();
  for (const auto& [idx, mentions] : m.per_sentence_entities) {
    json arr = json::array();
    for (const auto& e : mentions) arr.push_back({{"name", e.name}, {"incidental", e.incidental}});
    per_sentence[std::to_string(idx)] = arr;
  }
  j = {{"characters", characters}, {"style_descriptors", m.style_descriptors}, {"per_sentence_entities", per_sentence}};
}

void from_json(const json& j, StoryMetadata& m) {
  m = {};
  for (const auto& c : j.at("characters")) {
    m.characters.push_back({c.at("name").get<std::string>(), c.at("descriptor").get<std::string>()});
  }
  m.style_descriptors = j.at("style_descriptors").get<std::vector<std::string>>();
  for (const auto& [key, arr] : j.at("per_sentence_entities").items()) {
    auto& out = m.per_sentence_entities[std::stoi(key)];
    for (const auto& e : arr) out.push_back({e.at("name").get<std::string>(), e.at("incidental").get<bool>()});
  }
}

void to_json(json& j, const Summary& s) {
  j = {{"story_id", s.story_id}, {"text", s.text}, {"word_count", s.word_count}};
}

void from_json(const json& j, Summary& s) {
  s.story_id = j.at("story_id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.word_count = j.at("word_count").get<std::size_t>();
}

void to_json(json& j, const Question& q) {
  j = {{"index", q.index},
       {"format", to_string(q.format)},
       {"stem", q.stem},
       {"options", q.options},
       {"correct_option", q.correct_option},
       {"focus", to_string(q.focus)}};
}

void from_json(const json& j, Question& q) {
  q.index = j.at("index").get<int>();
  q.format = format_from_string(j.value("format", std::string("multiple_choice")));
  q.stem = j.at("stem").get<std::string>();
  const auto options = j.at("options").get<std::vector<std::string>>();
  if (options.size() != 4) {
    fail(ErrorCode::ValidationFailed,
         "question " + std::to_string(q.index) + ": expected 4 options, got " + std::to_string(options.size()));
  }
  std::copy(options.begin(), options.end(), q.options.begin());
  q.correct_option = j.at("correct_option").get<int>();
  q.focus = focus_from_string(j.at("focus").get<std::string>());
}

void to_json(json& j, const QuestionSet& q) {
  j = {{"story_id", q.story_id}, {"questions", q.questions}};
}

void from_json(const json& j, QuestionSet& q) {
  q.story_id = j.at("story_id").get<std::string>();
  q.questions = j.at("questions").get<std::vector<Question>>();
}

}  // namespace genread
