#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "p2p/mbti.hpp"
#include "p2p/text.hpp"

namespace p2p {

struct UserRecord {
  std::string id;
  std::vector<std::string> raw_posts;
  std::string normalized_text;
  std::optional<MbtiType> label;
};

struct Corpus {
  std::vector<UserRecord> records;
  std::map<MbtiType, std::size_t> label_histogram;

  std::size_t size() const { return records.size(); }
  void recount_histogram();
};

struct SplitSpec {
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = false;

  void validate() const;  // throws ConfigError
};

// Reads the PersonalityCafe-format corpus: comma-separated, double-quote
// quoting (embedded quotes doubled, newlines allowed inside quotes), header
// row `type,posts`. Posts split on the literal "|||" token. Labels parsed
// strictly; bad rows raise MalformedRowError with the 1-based data row index.
Corpus load_corpus(const std::string& path);

// Applies normalize_text to every record, filling normalized_text.
void normalize_corpus(Corpus& corpus, const StopwordSet& stopwords, const WordMapper& lemmatizer);

struct SplitResult {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Deterministic seeded partition. Val/test sizes are floor(n*fraction); the
// remainder goes to train. Stratified mode splits each label group
// independently. Records keep their original corpus order within each split.
SplitResult split_corpus(const Corpus& corpus, const SplitSpec& spec);

// Normalized-corpus TSV (one record per line: id<TAB>label<TAB>normalized_text).
void save_corpus_tsv(const Corpus& corpus, const std::string& path);
Corpus load_corpus_tsv(const std::string& path);

}  // namespace p2p
