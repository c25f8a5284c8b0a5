#include "p2p/rag.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

constexpr std::string_view kContentToken = "<CONTENT>";
constexpr std::string_view kFeatureToken = "<FEATURE>";
constexpr std::string_view kSimTextsToken = "<SIM-TEXTS>";

std::size_t count_occurrences(const std::string& haystack, std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError("cannot open template file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Splice {
  std::size_t begin;
  std::size_t end;
  const std::string* replacement;
};

// Replaces each token with its text; a token with an empty replacement takes
// its whole line (including the trailing newline) with it.
std::string splice_template(const std::string& body,
                            std::vector<std::pair<std::string_view, std::string>> subs) {
  std::vector<Splice> splices;
  for (auto& [token, replacement] : subs) {
    const std::size_t pos = body.find(token);
    if (pos == std::string::npos) {
      throw MissingPlaceholderError("template body lacks " + std::string(token));
    }
    Splice s{pos, pos + token.size(), &replacement};
    if (replacement.empty()) {
      const std::size_t line_begin = body.rfind('\n', pos);
      s.begin = line_begin == std::string::npos ? 0 : line_begin + 1;
      const std::size_t line_end = body.find('\n', pos);
      s.end = line_end == std::string::npos ? body.size() : line_end + 1;
    }
    splices.push_back(s);
  }
  std::sort(splices.begin(), splices.end(),
            [](const Splice& a, const Splice& b) { return a.begin < b.begin; });
  std::string out;
  out.reserve(body.size());
  std::size_t cursor = 0;
  for (const Splice& s : splices) {
    if (s.end <= cursor) continue;  // swallowed by a previous elision
    const std::size_t begin = std::max(s.begin, cursor);
    out.append(body, cursor, begin - cursor);
    out += *s.replacement;
    cursor = s.end;
  }
  out.append(body, cursor, body.size() - cursor);
  return out;
}

std::uint64_t hash64(std::uint64_t seed, const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

MbtiType majority_vote(std::span<const Demonstration> demos) {
  std::array<int, 4> bits{};
  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    int first = 0, second = 0;
    for (const auto& demo : demos) {
      const char c = demo.label.letter(static_cast<Dimension>(d));
      (c == kDimensionLetters[d][0] ? first : second) += 1;
    }
    bits[d] = second > first ? 1 : 0;  // ties go to the first letter
  }
  return dims_to_mbti(bits);
}

}  // namespace

void PromptTemplate::validate() const {
  for (std::string_view token : {kContentToken, kFeatureToken, kSimTextsToken}) {
    const std::size_t n = count_occurrences(body, token);
    if (n != 1) {
      throw MissingPlaceholderError("template body must contain " + std::string(token) +
                                    " exactly once, found " + std::to_string(n));
    }
  }
  if (body.find(kOutputInstruction) == std::string::npos) {
    throw MissingPlaceholderError("template body must contain the instruction \"" +
                                  std::string(kOutputInstruction) + "\"");
  }
  for (std::string_view token : {std::string_view("<POSTS>"), std::string_view("<LABEL>")}) {
    if (demo_item.find(token) == std::string::npos) {
      throw MissingPlaceholderError("demo item template lacks " + std::string(token));
    }
  }
}

PromptTemplate PromptTemplate::default_template() {
  PromptTemplate t;
  t.body =
      "You are an expert in MBTI personality typing. Read the material below and decide "
      "which one of the 16 MBTI types best fits the target user.\n"
      "\n"
      "Target user's posts: <CONTENT>\n"
      "\n"
      "Psychological assessment of the target user: <FEATURE>\n"
      "\n"
      "Reference users most similar to the target, arranged in descending order of semantic "
      "similarity, each with their verified MBTI type:<SIM-TEXTS>\n"
      "\n"
      "Respond with the target user's MBTI type and nothing else; "
      "return 4 uppercase letters only.\n";
  t.demo_item = "\n[<LABEL>] <POSTS>";
  return t;
}

PromptTemplate PromptTemplate::load(const std::string& body_path,
                                    const std::string& demo_item_path) {
  PromptTemplate t;
  t.body = read_file(body_path);
  t.demo_item = read_file(demo_item_path);
  // Trailing newline in a demo-item file is editor noise, not format.
  while (!t.demo_item.empty() && t.demo_item.back() == '\n') t.demo_item.pop_back();
  t.validate();
  return t;
}

ScriptedLlmClient::ScriptedLlmClient(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::string ScriptedLlmClient::complete(const std::string& prompt) {
  std::lock_guard<std::mutex> lock(mutex_);
  prompts_.push_back(prompt);
  if (responses_.empty()) throw TransportError("scripted client has no responses");
  const std::size_t i = std::min(next_, responses_.size() - 1);
  ++next_;
  return responses_[i];
}

std::vector<std::string> ScriptedLlmClient::prompts() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return prompts_;
}

std::size_t ScriptedLlmClient::calls() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return prompts_.size();
}

std::string HashLlmClient::complete(const std::string& prompt) {
  const auto& types = all_mbti_types();
  return types[hash64(seed_, prompt) % types.size()].str();
}

std::vector<Demonstration> retrieve_demonstrations(const VectorIndex& index,
                                                   const UserVector& query, std::size_t k) {
  const SearchResult result = index.search(query.values, k);
  std::vector<Demonstration> demos;
  demos.reserve(result.hits.size());
  for (const auto& [id, distance] : result.hits) {
    const IndexEntry& e = index.entry(id);
    demos.push_back({e.posts_text, e.label, distance});
  }
  return demos;
}

std::string render_prompt(const std::string& posts, const std::string& features,
                          std::span<const Demonstration> demos, const PromptTemplate& tmpl) {
  tmpl.validate();
  std::string demo_block;
  for (const auto& demo : demos) {
    std::string item = tmpl.demo_item;
    const std::size_t label_pos = item.find("<LABEL>");
    item.replace(label_pos, 7, demo.label.str());
    const std::size_t posts_pos = item.find("<POSTS>");
    item.replace(posts_pos, 7, demo.posts_text);
    demo_block += item;
  }
  return splice_template(tmpl.body, {{kContentToken, posts},
                                     {kFeatureToken, features},
                                     {kSimTextsToken, std::move(demo_block)}});
}

PredictionOutcome predict_user(const UserRecord& user, const VectorIndex* index,
                               const EmbeddingProvider& provider, const FeatureGenerator& gen,
                               LlmClient& client, const PromptTemplate& tmpl,
                               const PredictOptions& options) {
  PredictionOutcome outcome;
  outcome.user_id = user.id;

  const std::string features =
      options.with_features ? gen.generate(user.normalized_text) : std::string();

  if (options.with_rag) {
    if (index == nullptr || index->empty()) {
      throw EmptyIndexError("retrieval requested but no index available");
    }
    UserVectorOptions uv_opts;
    uv_opts.with_features = options.with_features;
    uv_opts.l2_normalize_parts = options.l2_normalize_parts;
    const UserVector query =
        build_user_vector(user.normalized_text, features, provider, uv_opts);
    const SearchResult result = index->search(query.values, options.k);
    for (const auto& [id, distance] : result.hits) {
      const IndexEntry& e = index->entry(id);
      outcome.demos.push_back({e.posts_text, e.label, distance});
      outcome.demo_ids.push_back(id);
    }
  }

  std::string content = user.normalized_text;
  if (options.content_max_chars > 0 && content.size() > options.content_max_chars) {
    content.resize(options.content_max_chars);
  }
  const std::string prompt = render_prompt(content, features, outcome.demos, tmpl);
  outcome.prompt = prompt;

  const int max_attempts = std::max(1, options.retries);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    outcome.attempts = attempt;
    outcome.raw_response = client.complete(prompt);
    try {
      outcome.predicted = parse_mbti(outcome.raw_response, ParseMode::Lenient);
      return outcome;
    } catch (const InvalidTypeError&) {
      // retry with the identical prompt
    }
  }
  outcome.predicted = majority_vote(outcome.demos);
  outcome.fallback_used = true;
  return outcome;
}

std::vector<PredictionOutcome> predict_batch(std::span<const UserRecord> users,
                                             const VectorIndex* index,
                                             const EmbeddingProvider& provider,
                                             const FeatureGenerator& gen, LlmClient& client,
                                             const PromptTemplate& tmpl,
                                             const PredictOptions& options,
                                             std::size_t max_in_flight) {
  std::vector<PredictionOutcome> outcomes(users.size());
  if (users.empty()) return outcomes;
  const std::size_t workers = std::max<std::size_t>(1, std::min(max_in_flight, users.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= users.size()) return;
      try {
        outcomes[i] = predict_user(users[i], index, provider, gen, client, tmpl, options);
      } catch (const std::exception& e) {
        outcomes[i].user_id = users[i].id;
        outcomes[i].ok = false;
        outcomes[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

}  // namespace p2p
