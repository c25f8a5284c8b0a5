#include "p2p/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

// RFC-4180-ish reader: comma separator, double-quote quoting with "" escapes,
// newlines allowed inside quoted fields.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at end of input.
  bool next_row(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    while (true) {
      if (c == EOF) {
        fields.push_back(std::move(field));
        return true;
      }
      if (quoted) {
        if (c == '"') {
          const int peek = in_.peek();
          if (peek == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(static_cast<char>(c));
        }
      } else {
        if (c == '"' && field.empty()) {
          quoted = true;
        } else if (c == ',') {
          fields.push_back(std::move(field));
          field.clear();
        } else if (c == '\n') {
          fields.push_back(std::move(field));
          return true;
        } else if (c == '\r') {
          // swallow, handle \r\n
        } else {
          field.push_back(static_cast<char>(c));
        }
      }
      c = in_.get();
    }
  }

 private:
  std::istream& in_;
};

std::uint64_t next_bounded(std::mt19937_64& rng, std::uint64_t bound) {
  return rng() % bound;  // deterministic across platforms; bias is irrelevant here
}

// Shuffles indices and cuts them into train/val/test. Val/test get
// floor(n*fraction), train the rest.
void assign_split(const std::vector<std::size_t>& group, const SplitSpec& spec,
                  std::mt19937_64& rng, std::vector<int>& assignment) {
  std::vector<std::size_t> order = group;
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(next_bounded(rng, i));
    std::swap(order[i - 1], order[j]);
  }
  const auto n = static_cast<double>(order.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * spec.val_fraction + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * spec.test_fraction + 1e-9));
  const std::size_t n_train = order.size() - n_val - n_test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    assignment[order[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  }
}

}  // namespace

void Corpus::recount_histogram() {
  label_histogram.clear();
  for (const auto& rec : records) {
    if (rec.label) ++label_histogram[*rec.label];
  }
}

void SplitSpec::validate() const {
  if (train_fraction <= 0 || val_fraction <= 0 || test_fraction <= 0) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError("cannot open corpus file: " + path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next_row(fields) || fields.size() < 2) {
    throw MalformedRowError(0, "missing header row (expected `type,posts`)");
  }
  Corpus corpus;
  std::size_t row = 0;
  while (reader.next_row(fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (fields.size() != 2) {
      throw MalformedRowError(row, "expected 2 columns, got " + std::to_string(fields.size()));
    }
    UserRecord rec;
    rec.id = std::to_string(row - 1);
    try {
      rec.label = parse_mbti(fields[0], ParseMode::Strict);
    } catch (const InvalidTypeError& e) {
      throw MalformedRowError(row, std::string("invalid label: ") + e.what());
    }
    rec.raw_posts = split_posts(fields[1]);
    corpus.records.push_back(std::move(rec));
  }
  corpus.recount_histogram();
  return corpus;
}

void normalize_corpus(Corpus& corpus, const StopwordSet& stopwords,
                      const WordMapper& lemmatizer) {
  for (auto& rec : corpus.records) {
    std::string joined;
    for (std::size_t i = 0; i < rec.raw_posts.size(); ++i) {
      if (i > 0) joined.push_back(' ');
      joined += rec.raw_posts[i];
    }
    rec.normalized_text = normalize_text(joined, stopwords, lemmatizer);
  }
}

SplitResult split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  if (corpus.records.empty()) throw EmptyCorpusError("cannot split an empty corpus");

  const std::size_t n = corpus.records.size();
  std::vector<int> assignment(n, 0);
  std::mt19937_64 rng(spec.seed);

  if (spec.stratified) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string key = corpus.records[i].label ? corpus.records[i].label->str() : "";
      groups[key].push_back(i);
    }
    for (auto& [key, group] : groups) assign_split(group, spec, rng, assignment);
  } else {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    assign_split(all, spec, rng, assignment);
  }

  SplitResult result;
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& target = assignment[i] == 0 ? result.train : (assignment[i] == 1 ? result.val
                                                                             : result.test);
    target.records.push_back(corpus.records[i]);
  }
  result.train.recount_histogram();
  result.val.recount_histogram();
  result.test.recount_histogram();
  return result;
}

void save_corpus_tsv(const Corpus& corpus, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + tmp);
    for (const auto& rec : corpus.records) {
      out << rec.id << '\t' << (rec.label ? rec.label->str() : "????") << '\t'
          << rec.normalized_text << '\n';
    }
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Corpus load_corpus_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError("cannot open corpus file: " + path);
  Corpus corpus;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw MalformedRowError(row, "expected id<TAB>label<TAB>text");
    }
    UserRecord rec;
    rec.id = line.substr(0, t1);
    try {
      rec.label = parse_mbti(line.substr(t1 + 1, t2 - t1 - 1), ParseMode::Strict);
    } catch (const InvalidTypeError& e) {
      throw MalformedRowError(row, std::string("invalid label: ") + e.what());
    }
    rec.normalized_text = line.substr(t2 + 1);
    corpus.records.push_back(std::move(rec));
  }
  corpus.recount_histogram();
  return corpus;
}

}  // namespace p2p
