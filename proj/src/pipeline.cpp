#include "p2p/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "p2p/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace p2p {

namespace {

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

// Runs fn(0..n-1) over at most `workers` threads; the first exception wins
// and is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

Metric metric_from(const PipelineConfig& config) {
  Metric m;
  if (config.metric_kind == "l2") {
    m.kind = MetricKind::L2;
  } else if (config.metric_kind == "cosine") {
    m.kind = MetricKind::Cosine;
  } else if (config.metric_kind == "combined") {
    m.kind = MetricKind::Combined;
  } else {
    throw ConfigError("unknown metric kind: " + config.metric_kind);
  }
  if (config.metric_w < 0.0 || config.metric_w > 1.0) {
    throw ConfigError("metric weight must be in [0, 1]");
  }
  m.weight_w = config.metric_w;
  return m;
}

EvalOptions eval_options_from(const PipelineConfig& config) {
  EvalOptions opts;
  opts.alpha = config.eval_alpha;
  if (config.positive_letters.size() != 4) {
    throw ConfigError("positive_letters must hold exactly 4 letters");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const char c = config.positive_letters[i];
    if (c != kDimensionLetters[i][0] && c != kDimensionLetters[i][1]) {
      throw ConfigError(std::string("positive letter '") + c + "' invalid for dimension " +
                        kDimensionNames[i]);
    }
    opts.positive_letters[i] = c;
  }
  return opts;
}

PredictOptions predict_options_from(const PipelineConfig& config) {
  PredictOptions opts;
  opts.k = config.k;
  opts.retries = config.retries;
  opts.with_rag = !config.no_rag;
  opts.with_features = !config.no_features;
  opts.content_max_chars = config.content_max_chars;
  opts.l2_normalize_parts = config.normalize_parts;
  return opts;
}

std::string default_feature_prompt() {
  return "Analyze the following social media posts and summarize the author's salient "
         "psychological characteristics across the four MBTI dimensions in a short "
         "paragraph.\n\nPosts: <CONTENT>\n";
}

std::vector<std::string> split_csv_ids(const std::string& field) {
  std::vector<std::string> out;
  std::stringstream ss(field);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path not configured");
  if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

struct BuiltIndex {
  VectorIndex index;
  std::vector<std::string> feature_texts;
};

// Shared by index-build, index-query and ablate so the query path stays
// identical to the database-construction path.
BuiltIndex build_index_from_corpus(const Corpus& train, const EmbeddingProvider& provider,
                                   const FeatureGenerator& generator, bool with_features,
                                   bool normalize_parts, std::size_t max_in_flight) {
  const std::size_t n = train.records.size();
  std::vector<UserVector> vectors(n);
  std::vector<std::string> features(n);
  parallel_for(n, max_in_flight, [&](std::size_t i) {
    const UserRecord& rec = train.records[i];
    if (rec.normalized_text.empty()) {
      throw ProviderError("user " + rec.id + " has empty normalized text");
    }
    if (with_features) features[i] = generator.generate(rec.normalized_text);
    UserVectorOptions opts;
    opts.with_features = with_features;
    opts.l2_normalize_parts = normalize_parts;
    vectors[i] = build_user_vector(rec.normalized_text, features[i], provider, opts);
  });
  BuiltIndex built;
  for (std::size_t i = 0; i < n; ++i) {
    const UserRecord& rec = train.records[i];
    built.index.add(std::move(vectors[i].values), rec.normalized_text, features[i], *rec.label);
  }
  built.index.freeze();
  built.feature_texts = std::move(features);
  return built;
}

json report_to_json(const RunReport& report) {
  json dims = json::array();
  for (const auto& dr : report.dimensions) {
    json d = {
        {"dimension", kDimensionNames[static_cast<std::size_t>(dr.dimension)]},
        {"accuracy", dr.accuracy},
        {"f1", dr.f1},
        {"support_pos", dr.support_pos},
        {"support_neg", dr.support_neg},
    };
    if (dr.auc) {
      d["auc"] = *dr.auc;
    } else {
      d["auc"] = nullptr;
      d["auc_note"] = dr.auc_note;
    }
    dims.push_back(d);
  }
  return json{{"dimensions", dims},
              {"exact_accuracy", report.exact_accuracy},
              {"evaluated", report.evaluated},
              {"fallback_count", report.fallback_count},
              {"skipped", report.skipped}};
}

}  // namespace

std::string PipelineConfig::render() const {
  json j;
  j["paths"] = {{"corpus", corpus_path},
                {"out_dir", out_dir},
                {"index", index_path},
                {"predictions", predictions_path},
                {"reports", reports_dir},
                {"template_body", template_body_path},
                {"template_demo", template_demo_path},
                {"stopwords", stopwords_path}};
  j["preprocess"] = {{"lemmatizer", lemmatizer},
                     {"train_fraction", train_fraction},
                     {"val_fraction", val_fraction},
                     {"test_fraction", test_fraction},
                     {"stratified", stratified}};
  j["retrieval"] = {{"k", k}, {"metric", metric_kind}, {"w", metric_w}};
  j["smote"] = {{"mode", smote_mode},
                {"neighbor_k", smote_neighbor_k},
                {"w", smote_w},
                {"target", smote_target}};
  j["eval"] = {{"alpha", eval_alpha}, {"positive_letters", positive_letters}};
  j["embedding"] = {{"provider", provider},
                    {"mock_post_dim", mock_post_dim},
                    {"mock_feature_dim", mock_feature_dim},
                    {"endpoint", embed_endpoint},
                    {"post_model", embed_post_model},
                    {"feature_model", embed_feature_model},
                    {"post_dim", embed_post_dim},
                    {"feature_dim", embed_feature_dim},
                    {"normalize_parts", normalize_parts}};
  j["llm"] = {{"kind", llm},
              {"endpoint", llm_endpoint},
              {"model", llm_model},
              {"timeout_ms", llm_timeout_ms},
              {"transport_attempts", llm_transport_attempts},
              {"backoff_ms", llm_backoff_ms},
              {"retries", retries}};
  j["flags"] = {{"no_rag", no_rag}, {"no_features", no_features}, {"dump_prompts", dump_prompts}};
  j["run"] = {{"content_max_chars", content_max_chars},
              {"max_in_flight", max_in_flight},
              {"seed", seed}};
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::parse(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  PipelineConfig c;
  if (j.contains("paths")) {
    const json& p = j["paths"];
    get_to(p, "corpus", c.corpus_path);
    get_to(p, "out_dir", c.out_dir);
    get_to(p, "index", c.index_path);
    get_to(p, "predictions", c.predictions_path);
    get_to(p, "reports", c.reports_dir);
    get_to(p, "template_body", c.template_body_path);
    get_to(p, "template_demo", c.template_demo_path);
    get_to(p, "stopwords", c.stopwords_path);
  }
  if (j.contains("preprocess")) {
    const json& p = j["preprocess"];
    get_to(p, "lemmatizer", c.lemmatizer);
    get_to(p, "train_fraction", c.train_fraction);
    get_to(p, "val_fraction", c.val_fraction);
    get_to(p, "test_fraction", c.test_fraction);
    get_to(p, "stratified", c.stratified);
  }
  if (j.contains("retrieval")) {
    const json& p = j["retrieval"];
    get_to(p, "k", c.k);
    get_to(p, "metric", c.metric_kind);
    get_to(p, "w", c.metric_w);
  }
  if (j.contains("smote")) {
    const json& p = j["smote"];
    get_to(p, "mode", c.smote_mode);
    get_to(p, "neighbor_k", c.smote_neighbor_k);
    get_to(p, "w", c.smote_w);
    get_to(p, "target", c.smote_target);
  }
  if (j.contains("eval")) {
    const json& p = j["eval"];
    get_to(p, "alpha", c.eval_alpha);
    get_to(p, "positive_letters", c.positive_letters);
  }
  if (j.contains("embedding")) {
    const json& p = j["embedding"];
    get_to(p, "provider", c.provider);
    get_to(p, "mock_post_dim", c.mock_post_dim);
    get_to(p, "mock_feature_dim", c.mock_feature_dim);
    get_to(p, "endpoint", c.embed_endpoint);
    get_to(p, "post_model", c.embed_post_model);
    get_to(p, "feature_model", c.embed_feature_model);
    get_to(p, "post_dim", c.embed_post_dim);
    get_to(p, "feature_dim", c.embed_feature_dim);
    get_to(p, "normalize_parts", c.normalize_parts);
  }
  if (j.contains("llm")) {
    const json& p = j["llm"];
    get_to(p, "kind", c.llm);
    get_to(p, "endpoint", c.llm_endpoint);
    get_to(p, "model", c.llm_model);
    get_to(p, "timeout_ms", c.llm_timeout_ms);
    get_to(p, "transport_attempts", c.llm_transport_attempts);
    get_to(p, "backoff_ms", c.llm_backoff_ms);
    get_to(p, "retries", c.retries);
  }
  if (j.contains("flags")) {
    const json& p = j["flags"];
    get_to(p, "no_rag", c.no_rag);
    get_to(p, "no_features", c.no_features);
    get_to(p, "dump_prompts", c.dump_prompts);
  }
  if (j.contains("run")) {
    const json& p = j["run"];
    get_to(p, "content_max_chars", c.content_max_chars);
    get_to(p, "max_in_flight", c.max_in_flight);
    get_to(p, "seed", c.seed);
  }
  if (c.k == 0) throw ConfigError("retrieval k must be >= 1");
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string PipelineConfig::resolved_index_path() const {
  return index_path.empty() ? out_dir + "/index.p2pidx" : index_path;
}

std::string PipelineConfig::resolved_predictions_path() const {
  return predictions_path.empty() ? out_dir + "/predictions.tsv" : predictions_path;
}

std::string PipelineConfig::resolved_reports_dir() const {
  return reports_dir.empty() ? out_dir : reports_dir;
}

Stack make_stack(const PipelineConfig& config) {
  Stack stack;
  if (config.provider == "mock") {
    stack.provider = mock_provider(config.seed, config.mock_post_dim, config.mock_feature_dim);
  } else if (config.provider == "http") {
    HttpProviderConfig hc;
    hc.endpoint = config.embed_endpoint;
    hc.post_model = config.embed_post_model;
    hc.feature_model = config.embed_feature_model;
    hc.post_dim = config.embed_post_dim;
    hc.feature_dim = config.embed_feature_dim;
    if (hc.endpoint.empty()) throw ConfigError("http provider requires embedding.endpoint");
    stack.provider = http_provider(hc);
  } else {
    throw ConfigError("unknown provider: " + config.provider);
  }

  if (config.llm == "mock") {
    stack.client = std::make_shared<HashLlmClient>(config.seed);
    stack.generator = mock_feature_generator();
  } else if (config.llm == "http") {
    HttpLlmConfig lc;
    lc.endpoint = config.llm_endpoint;
    lc.model = config.llm_model;
    lc.timeout_ms = config.llm_timeout_ms;
    lc.transport_attempts = config.llm_transport_attempts;
    lc.backoff_base_ms = config.llm_backoff_ms;
    if (lc.endpoint.empty()) throw ConfigError("http llm requires llm.endpoint");
    stack.client = std::shared_ptr<LlmClient>(http_llm_client(lc));
    stack.generator = std::make_unique<LlmFeatureGenerator>(stack.client, default_feature_prompt());
  } else {
    throw ConfigError("unknown llm kind: " + config.llm);
  }
  return stack;
}

StopwordSet resolve_stopwords(const PipelineConfig& config) {
  if (config.stopwords_path.empty()) return builtin_stopwords();
  return load_stopwords(config.stopwords_path);
}

WordMapper resolve_lemmatizer(const PipelineConfig& config) {
  if (config.lemmatizer == "identity") return identity_lemmatizer();
  if (config.lemmatizer == "suffix") return suffix_lemmatizer();
  throw ConfigError("unknown lemmatizer: " + config.lemmatizer);
}

PromptTemplate resolve_template(const PipelineConfig& config) {
  if (config.template_body_path.empty() != config.template_demo_path.empty()) {
    throw ConfigError("template_body and template_demo must be set together");
  }
  if (config.template_body_path.empty()) return PromptTemplate::default_template();
  return PromptTemplate::load(config.template_body_path, config.template_demo_path);
}

PreprocessResult cmd_preprocess(const PipelineConfig& config, std::ostream& log) {
  require_file(config.corpus_path, "corpus");
  Corpus corpus = load_corpus(config.corpus_path);
  normalize_corpus(corpus, resolve_stopwords(config), resolve_lemmatizer(config));

  SplitSpec spec;
  spec.train_fraction = config.train_fraction;
  spec.val_fraction = config.val_fraction;
  spec.test_fraction = config.test_fraction;
  spec.seed = config.seed;
  spec.stratified = config.stratified;
  SplitResult split = split_corpus(corpus, spec);

  fs::create_directories(config.out_dir);
  save_corpus_tsv(corpus, config.out_dir + "/corpus_normalized.tsv");
  save_corpus_tsv(split.train, config.out_dir + "/train.tsv");
  save_corpus_tsv(split.val, config.out_dir + "/val.tsv");
  save_corpus_tsv(split.test, config.out_dir + "/test.tsv");

  PreprocessResult result;
  result.histogram = corpus.label_histogram;
  result.train_size = split.train.size();
  result.val_size = split.val.size();
  result.test_size = split.test.size();

  std::vector<std::pair<MbtiType, std::size_t>> ranked(result.histogram.begin(),
                                                       result.histogram.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  log << "label histogram (" << corpus.size() << " users):\n";
  for (const auto& [label, count] : ranked) log << "  " << label.str() << "  " << count << "\n";
  log << "split sizes: train " << result.train_size << ", val " << result.val_size << ", test "
      << result.test_size << "\n";
  return result;
}

IndexBuildResult cmd_index_build(const PipelineConfig& config, std::ostream& log) {
  const std::string train_path = config.out_dir + "/train.tsv";
  require_file(train_path, "train split");
  const Corpus train = load_corpus_tsv(train_path);
  if (train.records.empty()) throw EmptyCorpusError("train split is empty");

  Stack stack = make_stack(config);
  BuiltIndex built =
      build_index_from_corpus(train, *stack.provider, *stack.generator, !config.no_features,
                              config.normalize_parts, config.max_in_flight);

  const fs::path parent = fs::path(config.resolved_index_path()).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  built.index.save(config.resolved_index_path());

  IndexBuildResult result;
  result.entries = built.index.size();
  result.width = built.index.width();
  result.path = config.resolved_index_path();
  log << "indexed " << result.entries << " users, vector width " << result.width << " -> "
      << result.path << "\n";
  return result;
}

SmoteCmdResult cmd_smote(const PipelineConfig& config, std::ostream& log) {
  const std::string train_path = config.out_dir + "/train.tsv";
  require_file(train_path, "train split");
  const Corpus train = load_corpus_tsv(train_path);
  if (train.records.empty()) throw EmptyCorpusError("train split is empty");

  Stack stack = make_stack(config);
  const std::size_t n = train.records.size();
  std::vector<LabeledEmbedding> data(n);
  parallel_for(n, config.max_in_flight, [&](std::size_t i) {
    const UserRecord& rec = train.records[i];
    // The fine-tuned local LLM's hidden representation stands behind the
    // feature-encoder channel; default SMOTE works on its pooled form.
    EmbeddingMatrix rep = stack.provider->encode_features(rec.normalized_text);
    EmbeddingMatrix pooled_rep;
    pooled_rep.rows = 1;
    pooled_rep.dim = rep.dim;
    pooled_rep.values = average_pool(rep);
    data[i] = make_labeled_embedding(static_cast<std::int64_t>(i), std::move(pooled_rep),
                                     *rec.label);
  });

  SmotePlan plan;
  plan.neighbor_k = config.smote_neighbor_k;
  plan.weight_w = config.smote_w;
  plan.seed = config.seed;
  plan.mode = config.smote_mode == "classic" ? SmoteMode::Classic : SmoteMode::Paper;
  if (config.smote_mode != "paper" && config.smote_mode != "classic") {
    throw ConfigError("unknown smote mode: " + config.smote_mode);
  }
  if (config.smote_target > 0) plan.target_count = config.smote_target;

  SmoteResult smote = oversample(data, plan);

  fs::create_directories(config.out_dir);
  SmoteCmdResult result;
  result.path = config.out_dir + "/smote_export.tsv";
  result.written = export_synthetics(smote.samples, result.path);
  result.counts = std::move(smote.counts);
  result.warnings = std::move(smote.warnings);

  log << "label counts before -> after:\n";
  for (const auto& [label, counts] : result.counts) {
    log << "  " << label.str() << "  " << counts.before << " -> " << counts.after << "\n";
  }
  for (const auto& warning : result.warnings) log << "warning: " << warning << "\n";
  if (result.written == 0) log << "warning: nothing to synthesize\n";
  log << "wrote " << result.written << " synthetic samples -> " << result.path << "\n";
  return result;
}

PredictCmdResult cmd_predict(const PipelineConfig& config, std::ostream& log) {
  const std::string test_path = config.out_dir + "/test.tsv";
  require_file(test_path, "test split");
  const Corpus test = load_corpus_tsv(test_path);
  if (test.records.empty()) throw EmptyCorpusError("test split is empty");

  VectorIndex index;
  if (!config.no_rag) {
    require_file(config.resolved_index_path(), "index");
    index = VectorIndex::load(config.resolved_index_path());
    index.set_metric(metric_from(config));
    index.freeze();
  }

  Stack stack = make_stack(config);
  const PromptTemplate tmpl = resolve_template(config);
  const PredictOptions options = predict_options_from(config);

  std::vector<PredictionOutcome> outcomes =
      predict_batch(test.records, config.no_rag ? nullptr : &index, *stack.provider,
                    *stack.generator, *stack.client, tmpl, options, config.max_in_flight);

  std::string content;
  std::size_t failed = 0;
  for (const auto& outcome : outcomes) {
    if (!outcome.ok) {
      ++failed;
      content += outcome.user_id + "\tERROR\t0\t\t" + outcome.error + "\n";
      continue;
    }
    content += outcome.user_id + "\t" + outcome.predicted->str() + "\t" +
               (outcome.fallback_used ? "1" : "0") + "\t";
    for (std::size_t i = 0; i < outcome.demo_ids.size(); ++i) {
      if (i > 0) content += ",";
      content += std::to_string(outcome.demo_ids[i]);
    }
    content += "\n";
  }
  fs::create_directories(config.out_dir);
  PredictCmdResult result;
  result.path = config.resolved_predictions_path();
  atomic_write(result.path, content);

  if (config.dump_prompts) {
    const std::string prompts_dir = config.out_dir + "/prompts";
    fs::create_directories(prompts_dir);
    for (const auto& outcome : outcomes) {
      if (outcome.ok) atomic_write(prompts_dir + "/" + outcome.user_id + ".txt", outcome.prompt);
    }
  }

  result.failed = failed;
  result.outcomes = std::move(outcomes);
  log << "predicted " << result.outcomes.size() - failed << "/" << result.outcomes.size()
      << " users -> " << result.path << "\n";
  if (failed > 0) log << "warning: " << failed << " users failed\n";
  return result;
}

EvalCmdResult cmd_eval(const PipelineConfig& config, std::ostream& log) {
  const std::string preds_path = config.resolved_predictions_path();
  require_file(preds_path, "predictions");
  const std::string test_path = config.out_dir + "/test.tsv";
  require_file(test_path, "test split");

  std::map<std::string, MbtiType> truths;
  for (const auto& rec : load_corpus_tsv(test_path).records) truths.emplace(rec.id, *rec.label);

  // Demo labels for the AUC approximation come from the index.
  VectorIndex index;
  bool have_index = false;
  const std::string index_path = config.resolved_index_path();
  if (fs::exists(index_path)) {
    index = VectorIndex::load(index_path);
    have_index = true;
  }

  std::vector<PredictionOutcome> outcomes;
  std::ifstream in(preds_path, std::ios::binary);
  if (!in) throw FileUnreadableError("cannot open predictions: " + preds_path);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() < 3) throw MalformedRowError(row, "expected id/type/fallback/demos");
    PredictionOutcome outcome;
    outcome.user_id = cols[0];
    if (cols[1] == "ERROR") {
      outcome.ok = false;
      outcome.error = cols.size() > 4 ? cols[4] : "unknown";
    } else {
      outcome.predicted = parse_mbti(cols[1], ParseMode::Strict);
      outcome.fallback_used = cols[2] == "1";
      outcome.attempts = outcome.fallback_used ? config.retries : 1;
      if (cols.size() > 3 && have_index) {
        std::size_t rank = 0;
        for (const std::string& id_text : split_csv_ids(cols[3])) {
          std::uint64_t id = 0;
          try {
            id = static_cast<std::uint64_t>(std::stoull(id_text));
          } catch (const std::exception&) {
            throw MalformedRowError(row, "bad demo id \"" + id_text + "\"");
          }
          if (id >= index.size()) {
            throw MalformedRowError(row, "demo id out of range: " + id_text);
          }
          const IndexEntry& e = index.entry(id);
          outcome.demos.push_back({e.posts_text, e.label, static_cast<double>(rank++)});
          outcome.demo_ids.push_back(id);
        }
      }
    }
    outcomes.push_back(std::move(outcome));
  }
  if (outcomes.empty()) throw EmptyRunError("predictions file is empty");

  EvalCmdResult result;
  result.report = evaluate_run(outcomes, truths, eval_options_from(config));

  fs::create_directories(config.resolved_reports_dir());
  result.json_path = config.resolved_reports_dir() + "/report.json";
  result.text_path = config.resolved_reports_dir() + "/report.txt";
  atomic_write(result.json_path, report_to_json(result.report).dump(2) + "\n");
  const std::string table = render_report_table(result.report);
  atomic_write(result.text_path, table);
  log << table;
  return result;
}

SearchResult cmd_index_query(const PipelineConfig& config, const std::string& query_text,
                             std::ostream& log) {
  require_file(config.resolved_index_path(), "index");
  VectorIndex index = VectorIndex::load(config.resolved_index_path());
  index.set_metric(metric_from(config));
  index.freeze();

  Stack stack = make_stack(config);
  const std::string normalized =
      normalize_text(query_text, resolve_stopwords(config), resolve_lemmatizer(config));
  if (normalized.empty()) throw ConfigError("query text is empty after normalization");
  const std::string features =
      config.no_features ? std::string() : stack.generator->generate(normalized);
  UserVectorOptions opts;
  opts.with_features = !config.no_features;
  opts.l2_normalize_parts = config.normalize_parts;
  const UserVector query = build_user_vector(normalized, features, *stack.provider, opts);

  const SearchResult result = index.search(query.values, config.k);
  for (const auto& [id, distance] : result.hits) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", distance);
    log << id << "\t" << buf << "\t" << index.entry(id).label.str() << "\n";
  }
  return result;
}

AblateResult cmd_ablate(const PipelineConfig& config, const std::vector<std::size_t>& k_values,
                        std::ostream& log) {
  const std::string train_path = config.out_dir + "/train.tsv";
  const std::string test_path = config.out_dir + "/test.tsv";
  require_file(train_path, "train split");
  require_file(test_path, "test split");
  const Corpus train = load_corpus_tsv(train_path);
  const Corpus test = load_corpus_tsv(test_path);

  std::map<std::string, MbtiType> truths;
  for (const auto& rec : test.records) truths.emplace(rec.id, *rec.label);

  Stack stack = make_stack(config);
  const PromptTemplate tmpl = resolve_template(config);
  const Metric metric = metric_from(config);
  const EvalOptions eval_opts = eval_options_from(config);

  const std::string ablate_dir = config.resolved_reports_dir() + "/ablate";
  fs::create_directories(ablate_dir);

  AblateResult result;
  // One index per embedding configuration, built lazily and reused across
  // cells. Feature-on and feature-off vectors differ in width, so they cannot
  // share a single index.
  std::map<bool, std::unique_ptr<VectorIndex>> index_cache;
  auto index_for = [&](bool features) -> VectorIndex* {
    auto it = index_cache.find(features);
    if (it == index_cache.end()) {
      BuiltIndex built = build_index_from_corpus(train, *stack.provider, *stack.generator,
                                                 features, config.normalize_parts,
                                                 config.max_in_flight);
      built.index.set_metric(metric);
      ++result.index_builds;
      it = index_cache.emplace(features, std::make_unique<VectorIndex>(std::move(built.index)))
               .first;
    }
    return it->second.get();
  };

  int cell_number = 0;
  for (bool rag : {true, false}) {
    for (bool features : {true, false}) {
      for (std::size_t k : k_values) {
        AblateCell cell;
        cell.label = std::string("(") + static_cast<char>('a' + cell_number % 26) + ")";
        ++cell_number;
        cell.rag = rag;
        cell.features = features;
        cell.k = k;
        try {
          PredictOptions options = predict_options_from(config);
          options.k = k;
          options.with_rag = rag;
          options.with_features = features;
          const VectorIndex* index = rag ? index_for(features) : nullptr;
          std::vector<PredictionOutcome> outcomes =
              predict_batch(test.records, index, *stack.provider, *stack.generator,
                            *stack.client, tmpl, options, config.max_in_flight);
          cell.report = evaluate_run(outcomes, truths, eval_opts);
          const std::string stem = ablate_dir + "/cell_rag" + (rag ? "1" : "0") + "_feat" +
                                   (features ? "1" : "0") + "_k" + std::to_string(k);
          json j = report_to_json(cell.report);
          j["variant"] = cell.label;
          j["rag"] = rag;
          j["features"] = features;
          j["k"] = k;
          atomic_write(stem + ".json", j.dump(2) + "\n");
          atomic_write(stem + ".txt", render_report_table(cell.report));
          cell.report_json_path = stem + ".json";
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
        }
        log << cell.label << " rag=" << (rag ? "on" : "off")
            << " features=" << (features ? "on" : "off") << " k=" << k
            << (cell.ok ? " ok" : std::string(" FAILED: ") + cell.error) << "\n";
        result.cells.push_back(std::move(cell));
      }
    }
  }
  log << "index builds: " << result.index_builds << "\n";
  return result;
}

}  // namespace p2p
