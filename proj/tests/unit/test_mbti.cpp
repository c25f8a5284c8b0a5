#include <doctest.h>

#include <random>
#include <set>

#include "p2p/mbti.hpp"

using namespace p2p;

TEST_CASE("strict parse accepts valid codes and trims whitespace") {
  CHECK(parse_mbti("ENTP").str() == "ENTP");
  CHECK(parse_mbti("  INFP\n").str() == "INFP");
  CHECK(parse_mbti("ESTJ", ParseMode::Strict).str() == "ESTJ");
}

TEST_CASE("strict parse rejects case, garbage and misplaced letters") {
  CHECK_THROWS_AS(parse_mbti("infp"), InvalidTypeError);
  CHECK_THROWS_AS(parse_mbti("ABCD"), InvalidTypeError);
  CHECK_THROWS_AS(parse_mbti("INF"), InvalidTypeError);
  CHECK_THROWS_AS(parse_mbti("INFPX"), InvalidTypeError);
  CHECK_THROWS_AS(parse_mbti("PFNI"), InvalidTypeError);  // right letters, wrong positions
  CHECK_THROWS_AS(parse_mbti(""), InvalidTypeError);
}

TEST_CASE("lenient parse uppercases and strips non-letters") {
  CHECK(parse_mbti("infp", ParseMode::Lenient).str() == "INFP");
  CHECK(parse_mbti(" e-n-t-p ", ParseMode::Lenient).str() == "ENTP");
  CHECK(parse_mbti("I N F P!", ParseMode::Lenient).str() == "INFP");
  CHECK_THROWS_AS(parse_mbti("the type is INFP", ParseMode::Lenient), InvalidTypeError);
}

TEST_CASE("dimension encoding follows the I/N/T/J-first convention") {
  CHECK(mbti_to_dims(parse_mbti("INFP")) == std::array<int, 4>{0, 0, 1, 1});
  CHECK(mbti_to_dims(parse_mbti("ESTJ")) == std::array<int, 4>{1, 1, 0, 0});
  CHECK(dims_to_mbti({0, 0, 0, 0}).str() == "INTJ");
  CHECK(dims_to_mbti({1, 1, 1, 1}).str() == "ESFP");
}

TEST_CASE("all 16 types are distinct and round-trip through bits") {
  const auto& types = all_mbti_types();
  REQUIRE(types.size() == 16);
  std::set<std::string> names;
  std::set<std::array<int, 4>> bit_patterns;
  for (const auto& t : types) {
    names.insert(t.str());
    const auto bits = mbti_to_dims(t);
    bit_patterns.insert(bits);
    CHECK(dims_to_mbti(bits) == t);
    CHECK(parse_mbti(t.str()) == t);
  }
  CHECK(names.size() == 16);
  CHECK(bit_patterns.size() == 16);
}

TEST_CASE("property: strict parse accepts exactly the 16 valid codes") {
  std::set<std::string> valid;
  for (const auto& t : all_mbti_types()) valid.insert(t.str());

  std::mt19937 rng(7);
  std::uniform_int_distribution<int> letter('A', 'Z');
  int accepted = 0;
  for (int i = 0; i < 4000; ++i) {
    std::string s;
    for (int j = 0; j < 4; ++j) s.push_back(static_cast<char>(letter(rng)));
    bool parsed = true;
    try {
      parse_mbti(s);
    } catch (const InvalidTypeError&) {
      parsed = false;
    }
    CHECK(parsed == (valid.count(s) > 0));
    if (parsed) ++accepted;
  }
  // the valid codes themselves, to make sure both branches are exercised
  for (const auto& s : valid) CHECK_NOTHROW(parse_mbti(s));
  CHECK(accepted >= 0);
}
