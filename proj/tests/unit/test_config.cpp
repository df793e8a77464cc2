#include <gtest/gtest.h>

#include "genread/config.hpp"
#include "genread/errors.hpp"

using namespace genread;

namespace {

std::string error_of(const std::string& text) {
  try {
    Config::parse(text, "t.conf");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
    return e.what();
  }
  ADD_FAILURE() << "expected a parse error";
  return "";
}

}  // namespace

TEST(ConfigParse, SectionsKeysAndComments) {
  const auto c = Config::parse(
      "top = 1\n"
      "# comment\n"
      "[a]\n"
      "x = hello world   # trailing\n"
      "y = \"quoted # kept \\\"here\\\"\"\n"
      "\n"
      "[layout.C2]\n"
      "document = 0, 0, 0.55, 1\n"
      "image = 0.55, 0, 1, 1\n");
  EXPECT_EQ(c.get("", "top"), "1");
  EXPECT_EQ(c.get("a", "x"), "hello world");
  EXPECT_EQ(c.get("a", "y"), "quoted # kept \"here\"");
  EXPECT_FALSE(c.get("a", "z").has_value());
  const auto e = c.entries("layout.C2");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].first, "document");
  EXPECT_EQ(e[1].first, "image");
  EXPECT_EQ(split_list(e[1].second), (std::vector<std::string>{"0.55", "0", "1", "1"}));
}

TEST(ConfigParse, TypedGetters) {
  const auto c = Config::parse("[n]\ni = 42\nd = 0.25\ns = text\n");
  EXPECT_EQ(c.get_int("n", "i", 0), 42);
  EXPECT_DOUBLE_EQ(c.get_double("n", "d", 0), 0.25);
  EXPECT_EQ(c.get_int("n", "missing", 7), 7);
  EXPECT_EQ(c.get_string("n", "s", ""), "text");
  try {
    c.get_int("n", "s", 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
  }
}

TEST(ConfigParse, ErrorsNameTheLine) {
  EXPECT_NE(error_of("[a]\nno equals sign\n").find("t.conf:2"), std::string::npos);
  EXPECT_NE(error_of("[a]\nk = 1\nk = 2\n").find("t.conf:3"), std::string::npos);
  EXPECT_NE(error_of("[a\n").find("t.conf:1"), std::string::npos);
  EXPECT_NE(error_of("[a]\n = v\n").find("t.conf:2"), std::string::npos);
  EXPECT_NE(error_of("[a]\nk = \"open\n").find("t.conf:2"), std::string::npos);
}

TEST(ConfigParse, SetOverrides) {
  auto c = Config::parse("[g]\nseed = 1\n");
  c.set("g", "seed", "9");
  c.set("h", "new", "x");
  EXPECT_EQ(c.get_int("g", "seed", 0), 9);
  EXPECT_EQ(c.get("h", "new"), "x");
}

TEST(ConfigLoad, MissingFileIsIoFailure) {
  try {
    Config::load("/nonexistent/genread.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(ConfigLoad, ShippedFileParses) {
  const auto c = Config::load(GENREAD_CONFIG_DIR "/genread.conf");
  EXPECT_EQ(c.get_int("generation", "story_words", 0), 500);
  EXPECT_EQ(c.get_string("providers", "text_url", "x"), "");
  EXPECT_EQ(c.get_int("experiment", "distraction_problems", 0), 40);
}
