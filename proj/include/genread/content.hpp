#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genread/providers.hpp"

namespace genread {

struct PreferenceSpec {
  std::optional<std::string> genre;
  std::optional<std::string> animal;
  std::optional<std::string> favorite_title;

  // Preference clauses in "Key: value" form, in a fixed order.
  std::vector<std::string> clauses() const;
};

struct Sentence {
  int index = 0;       // 0-based position in the story
  std::string text;    // trimmed sentence text
  std::size_t begin = 0;  // span [begin, end) in the body, trailing whitespace included
  std::size_t end = 0;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Inclusive-tolerance word band: |n - target| <= tolerance * target.
struct WordBand {
  int target = 0;
  double tolerance = 0.0;

  int lower() const;
  int upper() const;
  bool contains(std::size_t words) const;
};

struct Story {
  std::string id;
  std::string title;
  std::string body;
  std::vector<Sentence> sentences;
  std::size_t word_count = 0;

  // Structural invariants; band is checked only when given.
  void validate(std::optional<WordBand> band = std::nullopt) const;

  friend bool operator==(const Story&, const Story&) = default;
};

Story make_story(std::string title, std::string body);

struct CharacterRef {
  std::string name;
  std::string descriptor;
  friend bool operator==(const CharacterRef&, const CharacterRef&) = default;
};

struct EntityMention {
  std::string name;
  bool incidental = false;
  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct StoryMetadata {
  std::vector<CharacterRef> characters;
  std::vector<std::string> style_descriptors;
  std::map<int, std::vector<EntityMention>> per_sentence_entities;

  void validate() const;
  friend bool operator==(const StoryMetadata&, const StoryMetadata&) = default;
};

struct Summary {
  std::string story_id;
  std::string text;
  std::size_t word_count = 0;

  void validate(std::optional<WordBand> band = std::nullopt) const;
  friend bool operator==(const Summary&, const Summary&) = default;
};

enum class QuestionFocus { Numeric, ProperNoun, Comprehension, Synthesis };
// Only MultipleChoice is generated; the others are accepted on parse.
enum class QuestionFormat { MultipleChoice, OpenEnded, FillInTheBlank };

struct Question {
  int index = 0;  // 1..10
  QuestionFormat format = QuestionFormat::MultipleChoice;
  std::string stem;
  std::array<std::string, 4> options;
  int correct_option = 0;
  QuestionFocus focus = QuestionFocus::Comprehension;

  void validate() const;
  friend bool operator==(const Question&, const Question&) = default;
};

inline constexpr std::size_t kQuestionsPerSet = 10;

struct QuestionSet {
  std::string story_id;
  std::vector<Question> questions;

  void validate() const;
  std::size_t distinct_focus_count() const;
  friend bool operator==(const QuestionSet&, const QuestionSet&) = default;
};

struct RetryPolicy {
  int retries = 3;  // attempts = 1 + retries
  std::uint64_t seed = 0;
};

Story generate_story(const PreferenceSpec& prefs, int target_words, double tolerance, TextProvider& provider,
                     const RetryPolicy& policy = {});

std::vector<Sentence> segment_sentences(std::string_view body);

StoryMetadata extract_story_metadata(const Story& story, TextProvider& provider, const RetryPolicy& policy = {});

Summary generate_summary(const Story& story, int target_words, double tolerance, TextProvider& provider,
                         const RetryPolicy& policy = {});

QuestionSet generate_questions(const Story& story, TextProvider& provider, const RetryPolicy& policy = {});

// Parses the questions interchange document ({"questions": [...]}) and
// validates it. Throws MalformedInput / ValidationFailed.
QuestionSet parse_question_set(std::string_view text, const std::string& story_id);

std::string_view to_string(QuestionFocus focus);
std::string_view to_string(QuestionFormat format);
QuestionFocus focus_from_string(std::string_view s);
QuestionFormat format_from_string(std::string_view s);

void to_json(nlohmann::json& j, const Story& s);
void from_json(const nlohmann::json& j, Story& s);
void to_json(nlohmann::json& j, const StoryMetadata& m);
void from_json(const nlohmann::json& j, StoryMetadata& m);
void to_json(nlohmann::json& j, const Summary& s);
void from_json(const nlohmann::json& j, Summary& s);
void to_json(nlohmann::json& j, const Question& q);
void from_json(const nlohmann::json& j, Question& q);
void to_json(nlohmann::json& j, const QuestionSet& q);
void from_json(const nlohmann::json& j, QuestionSet& q);

}  // namespace genread
