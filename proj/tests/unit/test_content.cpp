#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "genread/content.hpp"
#include "genread/errors.hpp"
#include "genread/mock_providers.hpp"
#include "genread/text_utils.hpp"

using namespace genread;
using json = nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::IoFailure;
}

// Forwards to the mock and keeps every request.
class RecordingProvider : public TextProvider {
 public:
  explicit RecordingProvider(MockTextOptions o = {}) : inner_(o) {}
  std::string generate_text(const TextGenRequest& req) override {
    requests.push_back(req);
    return inner_.generate_text(req);
  }
  std::string model_name() const override { return "recording"; }
  std::vector<TextGenRequest> requests;

 private:
  MockTextProvider inner_;
};

const char* kLunaStory =
    "Luna the rabbit lived near Willow Creek. Every morning, Luna gathered 3 carrots from the garden. "
    "One day, Pip the sparrow brought news of a storm. Luna and Pip hid the carrots inside a hollow log. "
    "When the sun returned, the friends shared a feast at Willow Creek.";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Story mock_story(std::uint64_t seed = 11) {
  MockTextProvider p({seed, std::nullopt});
  return generate_story({}, 500, 0.2, p, {3, seed});
}

}  // namespace

TEST(Segmentation, TwoTerminatorsTwoSentences) {
  const auto s = segment_sentences("A fox ran. It hid.");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].text, "A fox ran.");
  EXPECT_EQ(s[1].text, "It hid.");
}

TEST(Segmentation, AbbreviationDoesNotSplit) {
  EXPECT_EQ(segment_sentences("Dr. Fox ran.").size(), 1u);
  EXPECT_EQ(segment_sentences("Mrs. Hare met J. R. Owl today. They talked.").size(), 2u);
}

TEST(Segmentation, NoTerminatorIsOneSentence) {
  const std::string body = "a single clause without an ending";
  const auto s = segment_sentences(body);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].begin, 0u);
  EXPECT_EQ(s[0].end, body.size());
}

TEST(Segmentation, QuotesAndExclamations) {
  const auto s = segment_sentences("\"Run!\" shouted Nova. \"Where?\" Rowan asked. They ran.");
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].text, "\"Run!\" shouted Nova.");
  EXPECT_EQ(s[1].text, "\"Where?\"");
  EXPECT_EQ(s[3].text, "They ran.");
}

TEST(Segmentation, SpansTileTheBody) {
  const std::string body = "  First one.  Second one!\n\nThird?  Fourth without end";
  const auto s = segment_sentences(body);
  std::string joined;
  for (const auto& x : s) joined += body.substr(x.begin, x.end - x.begin);
  EXPECT_EQ(joined.size() + s.front().begin, body.size());
  EXPECT_EQ(body.substr(s.front().begin), joined);
}

TEST(WordBandTest, InclusiveBounds) {
  WordBand b{500, 0.2};
  EXPECT_EQ(b.lower(), 400);
  EXPECT_EQ(b.upper(), 600);
  EXPECT_TRUE(b.contains(400));
  EXPECT_TRUE(b.contains(600));
  EXPECT_FALSE(b.contains(399));
  WordBand s{50, 0.3};
  EXPECT_EQ(s.lower(), 35);
  EXPECT_EQ(s.upper(), 65);
}

TEST(Story, MockStoryFallsInBand) {
  const auto story = mock_story();
  EXPECT_GE(story.word_count, 400u);
  EXPECT_LE(story.word_count, 600u);
  story.validate(WordBand{500, 0.2});
}

TEST(Story, MockStoryIsDeterministic) { EXPECT_EQ(mock_story(5), mock_story(5)); }

TEST(Story, RequestCarriesOriginalityConstraintAndPreferences) {
  RecordingProvider p;
  PreferenceSpec prefs;
  prefs.genre = "adventure";
  prefs.animal = "fox";
  generate_story(prefs, 500, 0.2, p);
  ASSERT_FALSE(p.requests.empty());
  const auto prompt = p.requests.front().render_prompt();
  bool has_original = false;
  for (const auto& c : p.requests.front().constraints) {
    if (c.find("original") != std::string::npos) has_original = true;
  }
  EXPECT_TRUE(has_original);
  EXPECT_NE(prompt.find("adventure"), std::string::npos);
  EXPECT_NE(prompt.find("fox"), std::string::npos);
}

TEST(Story, RiggedShortOutputFailsAfterRetries) {
  RecordingProvider p({1, 10});
  EXPECT_EQ(code_of([&] { generate_story({}, 500, 0.2, p, {3, 0}); }), ErrorCode::ConstraintUnsatisfied);
  EXPECT_EQ(p.requests.size(), 4u);  // first attempt plus three retries
}

TEST(Story, PreconditionsOnTargetAndTolerance) {
  MockTextProvider p;
  EXPECT_EQ(code_of([&] { generate_story({}, 49, 0.2, p); }), ErrorCode::PreconditionViolated);
  EXPECT_EQ(code_of([&] { generate_story({}, 500, 0.0, p); }), ErrorCode::PreconditionViolated);
  EXPECT_EQ(code_of([&] { generate_story({}, 500, 1.0, p); }), ErrorCode::PreconditionViolated);
}

TEST(Story, UnavailableProviderIsNotRetried) {
  ScriptedTextProvider p;
  EXPECT_EQ(code_of([&] { generate_story({}, 500, 0.2, p); }), ErrorCode::ProviderUnavailable);
  EXPECT_EQ(p.calls(), 1);
}

TEST(Story, JsonRoundTrip) {
  const auto story = mock_story();
  EXPECT_EQ(json(story).get<Story>(), story);
}

TEST(Metadata, LunaMatchesGolden) {
  MockTextProvider p({0, std::nullopt});
  const auto story = make_story("Luna and the storm", kLunaStory);
  ASSERT_EQ(story.sentences.size(), 5u);
  const auto meta = extract_story_metadata(story, p);
  bool found = false;
  for (const auto& c : meta.characters) found = found || (c.name == "Luna" && c.descriptor == "rabbit");
  EXPECT_TRUE(found);
  const auto golden = json::parse(read_file(GENREAD_TEST_DATA "/luna_metadata.json"));
  EXPECT_EQ(json(meta), golden) << json(meta).dump(2);
}

TEST(Metadata, NoNamedEntitiesGivesEmptyCharacters) {
  MockTextProvider p;
  const auto story = make_story("plain", "the wind blew over the hill. a leaf fell down.");
  const auto meta = extract_story_metadata(story, p);
  EXPECT_TRUE(meta.characters.empty());
}

TEST(Metadata, Deterministic) {
  MockTextProvider p;
  const auto story = make_story("Luna and the storm", kLunaStory);
  EXPECT_EQ(extract_story_metadata(story, p), extract_story_metadata(story, p));
}

TEST(Metadata, EntitiesMapToSentences) {
  MockTextProvider p;
  const auto story = make_story("Luna and the storm", kLunaStory);
  const auto meta = extract_story_metadata(story, p);
  const auto it = meta.per_sentence_entities.find(2);
  ASSERT_NE(it, meta.per_sentence_entities.end());
  bool pip = false;
  for (const auto& m : it->second) pip = pip || m.name == "Pip";
  EXPECT_TRUE(pip);
}

TEST(Summary, FallsInBand) {
  MockTextProvider p;
  const auto story = mock_story();
  const auto s = generate_summary(story, 50, 0.3, p);
  EXPECT_GE(s.word_count, 35u);
  EXPECT_LE(s.word_count, 65u);
  EXPECT_EQ(s.story_id, story.id);
  EXPECT_EQ(s, generate_summary(story, 50, 0.3, p));
}

TEST(Summary, RiggedLengthFails) {
  MockTextProvider p({0, 200});
  const auto story = mock_story();
  EXPECT_EQ(code_of([&] { generate_summary(story, 50, 0.3, p); }), ErrorCode::ConstraintUnsatisfied);
}

TEST(Questions, MockGivesTenValidQuestions) {
  MockTextProvider p;
  const auto story = mock_story();
  const auto q = generate_questions(story, p);
  ASSERT_EQ(q.questions.size(), 10u);
  for (const auto& x : q.questions) {
    EXPECT_EQ(x.format, QuestionFormat::MultipleChoice);
    EXPECT_EQ(x.options.size(), 4u);
  }
  EXPECT_GE(q.distinct_focus_count(), 3u);
  EXPECT_EQ(parse_question_set(json(q).dump(), story.id), q);
  EXPECT_EQ(json(q).get<QuestionSet>(), q);
}

TEST(Questions, NineQuestionsRetryThenFail) {
  MockTextProvider mock;
  const auto story = mock_story();
  auto j = json(generate_questions(story, mock));
  j["questions"].erase(j["questions"].end() - 1);
  ScriptedTextProvider p;
  for (int i = 0; i < 4; ++i) p.push(j.dump());
  EXPECT_EQ(code_of([&] { generate_questions(story, p); }), ErrorCode::ConstraintUnsatisfied);
  EXPECT_EQ(p.calls(), 4);
}

TEST(Questions, DuplicateOptionsRejectedThenRetried) {
  MockTextProvider mock;
  const auto story = mock_story();
  const auto good = json(generate_questions(story, mock));
  auto bad = good;
  bad["questions"][0]["options"][1] = bad["questions"][0]["options"][0];
  ScriptedTextProvider p;
  p.push(bad.dump());
  p.push(good.dump());
  const auto q = generate_questions(story, p);
  EXPECT_EQ(p.calls(), 2);
  EXPECT_EQ(json(q), good);
}

TEST(Questions, ParserToleratesSurroundingProse) {
  MockTextProvider mock;
  const auto story = mock_story();
  const auto q = generate_questions(story, mock);
  EXPECT_EQ(parse_question_set("Here you go:\n" + json(q).dump() + "\nEnjoy!", story.id), q);
  EXPECT_EQ(code_of([&] { parse_question_set("no json here", story.id); }), ErrorCode::MalformedInput);
}
