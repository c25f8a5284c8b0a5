#include "p2p/text.hpp"

#include <cctype>
#include <fstream>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

bool is_lower_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

bool is_space_like(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Erases URL-shaped substrings in-place. A URL starts at "<scheme>://" or
// "www." and runs to the next whitespace.
std::string strip_urls(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    bool url = false;
    if (text.compare(i, 4, "www.") == 0) {
      url = true;
    } else if (text[i] >= 'a' && text[i] <= 'z') {
      // scheme = letter followed by letters/digits/+/-/. up to "://"
      std::size_t j = i;
      while (j < n && (is_lower_alnum(text[j]) || text[j] == '+' || text[j] == '-' ||
                       text[j] == '.')) {
        ++j;
      }
      if (j + 2 < n && text[j] == ':' && text[j + 1] == '/' && text[j + 2] == '/') url = true;
    }
    if (url) {
      while (i < n && !is_space_like(text[i])) ++i;
      continue;
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

const std::vector<std::string>& stopword_list() {
  // Fixed English list, v1. Mirrors data/stopwords_en.txt; keep the two in sync.
  static const std::vector<std::string> words = {
      "a",       "about",  "above",   "after",   "again",  "against", "all",     "am",
      "an",      "and",    "any",     "are",     "aren",   "as",      "at",      "be",
      "because", "been",   "before",  "being",   "below",  "between", "both",    "but",
      "by",      "can",    "cannot",  "could",   "did",    "do",      "does",    "doing",
      "don",     "down",   "during",  "each",    "few",    "for",     "from",    "further",
      "had",     "has",    "have",    "having",  "he",     "her",     "here",    "hers",
      "herself", "him",    "himself", "his",     "how",    "i",       "if",      "in",
      "into",    "is",     "it",      "its",     "itself", "just",    "ll",      "me",
      "more",    "most",   "my",      "myself",  "no",     "nor",     "not",     "now",
      "of",      "off",    "on",      "once",    "only",   "or",      "other",   "our",
      "ours",    "ourselves", "out",  "over",    "own",    "re",      "s",       "same",
      "she",     "should", "so",      "some",    "such",   "t",       "than",    "that",
      "the",     "their",  "theirs",  "them",    "themselves", "then", "there",  "these",
      "they",    "this",   "those",   "through", "to",     "too",     "under",   "until",
      "up",      "ve",     "very",    "was",     "we",     "were",    "what",    "when",
      "where",   "which",  "while",   "who",     "whom",   "why",     "will",    "with",
      "would",   "you",    "your",    "yours",   "yourself", "yourselves",
  };
  return words;
}

}  // namespace

WordMapper identity_lemmatizer() {
  return [](const std::string& w) { return w; };
}

WordMapper suffix_lemmatizer() {
  static const std::unordered_set<std::string> exceptions = {
      "is",   "was",  "has",    "this",  "its",  "his",   "hers", "during", "series",
      "species", "news", "bus",  "gas",  "yes",  "plus",  "thus", "us",     "as",
      "does", "goes", "being",  "thing", "things", "king", "sing", "ring",  "bring",
      "red",  "bed",  "need",   "feed",  "speed", "indeed",
  };
  auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  };
  auto one_pass = [is_vowel](const std::string& w) -> std::string {
    if (w.size() < 4 || exceptions.count(w)) return w;
    auto ends_with = [&w](std::string_view suf) {
      return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
    };
    auto drop_doubled = [is_vowel](std::string stem) {
      const std::size_t n = stem.size();
      if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) &&
          stem[n - 1] != 'l' && stem[n - 1] != 's') {
        stem.pop_back();
      }
      return stem;
    };
    if (ends_with("ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
    if (ends_with("sses")) return w.substr(0, w.size() - 2);
    if (ends_with("ing") && w.size() > 5) return drop_doubled(w.substr(0, w.size() - 3));
    if (ends_with("ed") && w.size() > 4 && !ends_with("eed")) {
      return drop_doubled(w.substr(0, w.size() - 2));
    }
    if (ends_with("es") && w.size() > 4) return w.substr(0, w.size() - 2);
    if (ends_with("s") && !ends_with("ss") && !ends_with("us") && !ends_with("is")) {
      return w.substr(0, w.size() - 1);
    }
    return w;
  };
  // Runs to a fixpoint so the mapper is idempotent (e.g. paintings -> paint).
  // Every rule shortens the word, so this terminates.
  return [one_pass](const std::string& w) -> std::string {
    std::string cur = w;
    while (true) {
      std::string next = one_pass(cur);
      if (next == cur) return cur;
      cur = std::move(next);
    }
  };
}

const StopwordSet& builtin_stopwords() {
  static const StopwordSet set(stopword_list().begin(), stopword_list().end());
  return set;
}

StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileUnreadableError("cannot open stopword file: " + path);
  StopwordSet set;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.empty() || line[0] == '#') continue;
    set.insert(line);
  }
  return set;
}

std::string normalize_text(std::string_view raw, const StopwordSet& stopwords,
                           const WordMapper& lemmatizer) {
  std::string lowered;
  lowered.reserve(raw.size());
  for (char c : raw) {
    lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  const std::string cleaned = strip_urls(lowered);

  std::string out;
  std::string token;
  auto flush = [&]() {
    if (token.empty()) return;
    if (!stopwords.count(token)) {
      std::string mapped = lemmatizer(token);
      if (!mapped.empty()) {
        if (!out.empty()) out.push_back(' ');
        out += mapped;
      }
    }
    token.clear();
  };
  for (char c : cleaned) {
    if (is_lower_alnum(c)) {
      token.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<std::string> split_posts(std::string_view joined) {
  std::vector<std::string> posts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = joined.find(kPostSeparator, start);
    if (pos == std::string_view::npos) {
      posts.emplace_back(joined.substr(start));
      break;
    }
    posts.emplace_back(joined.substr(start, pos - start));
    start = pos + kPostSeparator.size();
  }
  return posts;
}

}  // namespace p2p
