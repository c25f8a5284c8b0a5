#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "p2p/errors.hpp"

namespace p2p {

// One of the four binary personality axes. Each axis owns an ordered letter
// pair; the first letter is the canonical (reporting) one: I, N, T, J.
enum class Dimension : std::uint8_t { IE = 0, NS = 1, TF = 2, JP = 3 };

inline constexpr std::size_t kNumDimensions = 4;
inline constexpr std::array<std::array<char, 2>, kNumDimensions> kDimensionLetters{{
    {'I', 'E'},
    {'N', 'S'},
    {'T', 'F'},
    {'J', 'P'},
}};
inline constexpr std::array<const char*, kNumDimensions> kDimensionNames{"I/E", "N/S", "T/F",
                                                                         "J/P"};

enum class ParseMode { Strict, Lenient };

// A four-letter personality code, one letter per dimension. Immutable after
// construction; exactly 16 distinct values are constructible.
class MbtiType {
 public:
  MbtiType() : letters_{'I', 'N', 'T', 'J'} {}
  explicit MbtiType(const std::array<char, 4>& letters);

  char letter(Dimension d) const { return letters_[static_cast<std::size_t>(d)]; }
  const std::array<char, 4>& letters() const { return letters_; }
  std::string str() const { return std::string(letters_.begin(), letters_.end()); }

  auto operator<=>(const MbtiType&) const = default;

 private:
  std::array<char, 4> letters_;
};

// Parses a model or dataset answer into a type. Strict mode accepts exactly
// the 16 valid uppercase codes after trimming surrounding whitespace; lenient
// mode uppercases and strips non-letter characters first. Throws
// InvalidTypeError on anything else.
MbtiType parse_mbti(std::string_view text, ParseMode mode = ParseMode::Strict);

// Per-dimension binary encoding: 0 when the letter equals the first letter of
// the pair (I, N, T, J), otherwise 1.
std::array<int, 4> mbti_to_dims(const MbtiType& t);
MbtiType dims_to_mbti(const std::array<int, 4>& bits);

// All 16 constructible types in lexicographic bit order (INTJ first, ESFP last).
const std::vector<MbtiType>& all_mbti_types();

}  // namespace p2p
