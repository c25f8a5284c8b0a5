#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace p2p {

using StopwordSet = std::unordered_set<std::string>;

// Pluggable word-level lemmatizer. Implementations should be idempotent
// (map(map(w)) == map(w)) so that normalization is idempotent too.
using WordMapper = std::function<std::string(const std::string&)>;

WordMapper identity_lemmatizer();

// Small rule-based suffix stripper (ies/es/s/ing/ed) with an exception list.
// Crude by design; swap in a real lemmatizer through the WordMapper interface
// when fidelity matters.
WordMapper suffix_lemmatizer();

// The stopword list shipped with the repository (data/stopwords_en.txt holds
// the same words). Lowercase, one entry per word.
const StopwordSet& builtin_stopwords();

// Loads a one-word-per-line stopword file. Blank lines and '#' comments are
// skipped. Throws FileUnreadableError.
StopwordSet load_stopwords(const std::string& path);

// Normalizes raw post text: lowercase, URL substrings removed
// (scheme://... and www....), tokens = maximal runs of [a-z0-9] with every
// other character acting as a separator, stopwords dropped, survivors passed
// through the lemmatizer, result joined with single spaces.
std::string normalize_text(std::string_view raw, const StopwordSet& stopwords,
                           const WordMapper& lemmatizer);

// Separator the corpus uses to join one user's posts into a single field.
inline constexpr std::string_view kPostSeparator = "|||";

std::vector<std::string> split_posts(std::string_view joined);

}  // namespace p2p
