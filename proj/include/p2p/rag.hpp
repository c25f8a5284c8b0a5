#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "p2p/corpus.hpp"
#include "p2p/embedding.hpp"
#include "p2p/mbti.hpp"
#include "p2p/vector_index.hpp"

namespace p2p {

// A retrieved in-context example: posts plus their verified label, ordered by
// ascending distance (descending similarity) within a set.
struct Demonstration {
  std::string posts_text;
  MbtiType label;
  double distance = 0.0;
};

// Body must contain <CONTENT>, <FEATURE> and <SIM-TEXTS> exactly once plus the
// verbatim output instruction; demo_item uses <POSTS> and <LABEL>.
struct PromptTemplate {
  std::string body;
  std::string demo_item;

  void validate() const;  // throws MissingPlaceholderError
  static PromptTemplate default_template();
  static PromptTemplate load(const std::string& body_path, const std::string& demo_item_path);
};

inline constexpr std::string_view kOutputInstruction = "return 4 uppercase letters only";

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string model_name() const = 0;
};

// Replays a fixed list of responses in call order (repeats the last one when
// exhausted) and records the prompts it saw. Thread-safe.
class ScriptedLlmClient final : public LlmClient {
 public:
  explicit ScriptedLlmClient(std::vector<std::string> responses);
  std::string complete(const std::string& prompt) override;
  std::string model_name() const override { return "scripted"; }
  std::vector<std::string> prompts() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> responses_;
  std::vector<std::string> prompts_;
  std::size_t next_ = 0;
};

// Pure function of (seed, prompt): always answers with one of the 16 valid
// codes. Keeps mock-stack pipeline runs deterministic under any concurrency.
class HashLlmClient final : public LlmClient {
 public:
  explicit HashLlmClient(std::uint64_t seed) : seed_(seed) {}
  std::string complete(const std::string& prompt) override;
  std::string model_name() const override { return "mock"; }

 private:
  std::uint64_t seed_;
};

struct PredictionOutcome {
  std::string user_id;
  std::optional<MbtiType> predicted;
  std::vector<Demonstration> demos;
  std::vector<std::uint64_t> demo_ids;
  std::string prompt;
  std::string raw_response;
  int attempts = 0;
  bool fallback_used = false;
  bool ok = true;
  std::string error;
};

// Top-k under the index's configured metric, ascending distance.
std::vector<Demonstration> retrieve_demonstrations(const VectorIndex& index,
                                                   const UserVector& query, std::size_t k);

// Splices posts/features/demos into the template. A placeholder whose
// replacement is empty takes its whole template line with it, so ablated
// prompts carry no orphan headers.
std::string render_prompt(const std::string& posts, const std::string& features,
                          std::span<const Demonstration> demos, const PromptTemplate& tmpl);

struct PredictOptions {
  std::size_t k = 5;
  int retries = 3;  // total completion attempts before the fallback kicks in
  bool with_rag = true;
  bool with_features = true;
  std::size_t content_max_chars = 0;  // 0 = unlimited
  bool l2_normalize_parts = false;
};

// Runs the full per-user pipeline: feature generation, query-vector
// construction (the exact code path index entries are built with),
// retrieval, prompt rendering, completion, lenient parsing. Unparseable
// responses are retried with the identical prompt; after `retries` attempts
// the per-dimension majority vote over demonstration labels decides (ties go
// to the first letter of the pair). `index` may be null when with_rag is off.
PredictionOutcome predict_user(const UserRecord& user, const VectorIndex* index,
                               const EmbeddingProvider& provider, const FeatureGenerator& gen,
                               LlmClient& client, const PromptTemplate& tmpl,
                               const PredictOptions& options);

// Same, over many users with at most max_in_flight concurrent LLM calls.
// Outcomes come back in input order; a user whose pipeline throws is marked
// failed and the batch continues.
std::vector<PredictionOutcome> predict_batch(std::span<const UserRecord> users,
                                             const VectorIndex* index,
                                             const EmbeddingProvider& provider,
                                             const FeatureGenerator& gen, LlmClient& client,
                                             const PromptTemplate& tmpl,
                                             const PredictOptions& options,
                                             std::size_t max_in_flight);

}  // namespace p2p
