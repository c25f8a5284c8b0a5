#include "p2p/mbti.hpp"

#include <algorithm>
#include <cctype>

namespace p2p {

namespace {

bool letter_valid_at(char c, std::size_t pos) {
  return c == kDimensionLetters[pos][0] || c == kDimensionLetters[pos][1];
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

MbtiType::MbtiType(const std::array<char, 4>& letters) : letters_(letters) {
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    if (!letter_valid_at(letters_[i], i)) {
      throw InvalidTypeError(std::string("letter '") + letters_[i] + "' invalid at position " +
                             std::to_string(i));
    }
  }
}

MbtiType parse_mbti(std::string_view text, ParseMode mode) {
  std::string candidate;
  if (mode == ParseMode::Strict) {
    std::string_view t = trim(text);
    candidate.assign(t.begin(), t.end());
  } else {
    for (char c : text) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        candidate.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      }
    }
  }
  if (candidate.size() != 4) {
    throw InvalidTypeError("expected 4 letters, got \"" + candidate + "\"");
  }
  std::array<char, 4> letters{};
  std::copy_n(candidate.begin(), 4, letters.begin());
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    if (!letter_valid_at(letters[i], i)) {
      throw InvalidTypeError("\"" + candidate + "\" is not a valid type");
    }
  }
  return MbtiType(letters);
}

std::array<int, 4> mbti_to_dims(const MbtiType& t) {
  std::array<int, 4> bits{};
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    bits[i] = t.letters()[i] == kDimensionLetters[i][0] ? 0 : 1;
  }
  return bits;
}

MbtiType dims_to_mbti(const std::array<int, 4>& bits) {
  std::array<char, 4> letters{};
  for (std::size_t i = 0; i < kNumDimensions; ++i) {
    letters[i] = kDimensionLetters[i][bits[i] == 0 ? 0 : 1];
  }
  return MbtiType(letters);
}

const std::vector<MbtiType>& all_mbti_types() {
  static const std::vector<MbtiType> types = [] {
    std::vector<MbtiType> out;
    out.reserve(16);
    for (int mask = 0; mask < 16; ++mask) {
      std::array<int, 4> bits{(mask >> 3) & 1, (mask >> 2) & 1, (mask >> 1) & 1, mask & 1};
      out.push_back(dims_to_mbti(bits));
    }
    return out;
  }();
  return types;
}

}  // namespace p2p
