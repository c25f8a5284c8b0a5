#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "p2p/corpus.hpp"
#include "p2p/embedding.hpp"
#include "p2p/eval.hpp"
#include "p2p/http_clients.hpp"
#include "p2p/rag.hpp"
#include "p2p/smote.hpp"
#include "p2p/vector_index.hpp"

namespace p2p {

// Everything a run needs, loadable from a single JSON document. Secrets stay
// in environment variables (P2P_EMBED_API_KEY, P2P_LLM_API_KEY); they are
// never part of this structure.
struct PipelineConfig {
  // paths
  std::string corpus_path;
  std::string out_dir = "out";
  std::string index_path;          // empty -> <out_dir>/index.p2pidx
  std::string predictions_path;    // empty -> <out_dir>/predictions.tsv
  std::string reports_dir;         // empty -> <out_dir>
  std::string template_body_path;  // empty -> built-in template
  std::string template_demo_path;
  std::string stopwords_path;  // empty -> built-in list
  std::string lemmatizer = "suffix";  // or "identity"

  // split
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  bool stratified = false;

  // retrieval
  std::size_t k = 5;
  std::string metric_kind = "l2";  // l2 | cosine | combined
  double metric_w = 0.5;

  // smote
  std::string smote_mode = "paper";  // paper | classic
  std::size_t smote_neighbor_k = 5;
  double smote_w = 0.5;
  std::size_t smote_target = 0;  // 0 -> balance to the majority count

  // eval
  double eval_alpha = 1.0;
  std::string positive_letters = "INTJ";

  // providers
  std::string provider = "mock";  // mock | http
  std::size_t mock_post_dim = 16;
  std::size_t mock_feature_dim = 8;
  std::string embed_endpoint;
  std::string embed_post_model;
  std::string embed_feature_model;
  std::size_t embed_post_dim = 0;
  std::size_t embed_feature_dim = 0;
  bool normalize_parts = false;

  std::string llm = "mock";  // mock | http
  std::string llm_endpoint;
  std::string llm_model;
  int llm_timeout_ms = 60000;
  int llm_transport_attempts = 3;
  int llm_backoff_ms = 500;
  int retries = 3;

  // ablation flags
  bool no_rag = false;
  bool no_features = false;
  bool dump_prompts = false;

  std::size_t content_max_chars = 0;
  std::size_t max_in_flight = 4;
  std::uint64_t seed = 42;

  std::string render() const;  // JSON text
  static PipelineConfig parse(const std::string& json_text);
  static PipelineConfig load(const std::string& path);

  std::string resolved_index_path() const;
  std::string resolved_predictions_path() const;
  std::string resolved_reports_dir() const;

  bool operator==(const PipelineConfig&) const = default;
};

// Provider + generator + client wired per the config.
struct Stack {
  std::unique_ptr<EmbeddingProvider> provider;
  std::unique_ptr<FeatureGenerator> generator;
  std::shared_ptr<LlmClient> client;
};

Stack make_stack(const PipelineConfig& config);
StopwordSet resolve_stopwords(const PipelineConfig& config);
WordMapper resolve_lemmatizer(const PipelineConfig& config);
PromptTemplate resolve_template(const PipelineConfig& config);

struct PreprocessResult {
  std::map<MbtiType, std::size_t> histogram;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
  std::size_t test_size = 0;
};

// Normalizes the corpus and writes corpus_normalized.tsv plus the three split
// files under out_dir.
PreprocessResult cmd_preprocess(const PipelineConfig& config, std::ostream& log);

struct IndexBuildResult {
  std::size_t entries = 0;
  std::size_t width = 0;
  std::string path;
};

// One index entry per training user; written atomically (provider failures
// leave no output file).
IndexBuildResult cmd_index_build(const PipelineConfig& config, std::ostream& log);

struct SmoteCmdResult {
  std::size_t written = 0;
  std::map<MbtiType, LabelCounts> counts;
  std::vector<std::string> warnings;
  std::string path;
};

SmoteCmdResult cmd_smote(const PipelineConfig& config, std::ostream& log);

struct PredictCmdResult {
  std::vector<PredictionOutcome> outcomes;
  std::string path;
  std::size_t failed = 0;
};

PredictCmdResult cmd_predict(const PipelineConfig& config, std::ostream& log);

struct EvalCmdResult {
  RunReport report;
  std::string json_path;
  std::string text_path;
};

EvalCmdResult cmd_eval(const PipelineConfig& config, std::ostream& log);

// Prints one "id distance label" line per hit for an ad-hoc text query.
SearchResult cmd_index_query(const PipelineConfig& config, const std::string& query_text,
                             std::ostream& log);

struct AblateCell {
  std::string label;  // (a), (b), ...
  bool rag = true;
  bool features = true;
  std::size_t k = 5;
  bool ok = false;
  std::string error;
  std::string report_json_path;
  RunReport report;
};

struct AblateResult {
  std::vector<AblateCell> cells;
  std::size_t index_builds = 0;  // distinct embedding configurations built
};

// Cross-product of {rag on/off} x {features on/off} x k values. Indexes are
// cached per embedding configuration; per-cell failures are isolated.
AblateResult cmd_ablate(const PipelineConfig& config, const std::vector<std::size_t>& k_values,
                        std::ostream& log);

}  // namespace p2p
