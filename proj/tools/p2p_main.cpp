// p2p: RAG-based MBTI prediction pipeline over social-media posts.
//
// Subcommands: preprocess, index-build, index-query, smote, predict, eval,
// ablate. Configuration comes from a JSON file (--config) with command-line
// overrides; secrets only via P2P_EMBED_API_KEY / P2P_LLM_API_KEY.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "p2p/errors.hpp"
#include "p2p/pipeline.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool mock = false;
};

void apply_globals(p2p::PipelineConfig& config, const GlobalArgs& args) {
  if (args.seed) config.seed = *args.seed;
  if (args.mock) {
    config.provider = "mock";
    config.llm = "mock";
  }
}

p2p::PipelineConfig load_config(const GlobalArgs& args) {
  p2p::PipelineConfig config;
  if (!args.config_path.empty()) config = p2p::PipelineConfig::load(args.config_path);
  apply_globals(config, args);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"P2P: MBTI prediction from social-media posts"};
  app.require_subcommand(1);

  GlobalArgs globals;
  app.add_option("--config", globals.config_path, "JSON config file");
  app.add_option("--seed", globals.seed, "override the run seed");
  app.add_flag("--mock", globals.mock, "use the offline mock provider and LLM");

  std::string corpus_override;
  std::string out_dir_override;
  std::string predictions_override;
  std::string query_text;
  std::string positive_letters;
  std::vector<std::size_t> k_values;
  std::size_t k_override = 0;
  double alpha = -1.0;
  bool no_rag = false;
  bool no_features = false;
  bool dump_prompts = false;

  CLI::App* preprocess = app.add_subcommand("preprocess", "normalize the corpus and split it");
  preprocess->add_option("--corpus", corpus_override, "corpus CSV (type,posts)");
  preprocess->add_option("--out-dir", out_dir_override, "output directory");

  CLI::App* index_build = app.add_subcommand("index-build", "embed the train split and persist the index");
  index_build->add_option("--out-dir", out_dir_override, "directory holding the split files");
  index_build->add_flag("--no-features", no_features, "omit the feature part of user vectors");

  CLI::App* index_query = app.add_subcommand("index-query", "query the index with ad-hoc text");
  index_query->add_option("--text", query_text, "raw posts text to embed and search")->required();
  index_query->add_option("--k", k_override, "number of neighbors");
  index_query->add_option("--out-dir", out_dir_override, "directory holding the index");
  index_query->add_flag("--no-features", no_features, "omit the feature part of the query");

  CLI::App* smote = app.add_subcommand("smote", "oversample minority labels and export synthetics");
  smote->add_option("--out-dir", out_dir_override, "directory holding the split files");

  CLI::App* predict = app.add_subcommand("predict", "predict the test split via the online LLM");
  predict->add_option("--out-dir", out_dir_override, "directory holding splits and index");
  predict->add_option("--k", k_override, "demonstrations per prompt");
  predict->add_option("--predictions-out", predictions_override,
                      "predictions file path (for k sweeps)");
  predict->add_flag("--no-rag", no_rag, "skip retrieval (no demonstrations)");
  predict->add_flag("--no-features", no_features, "skip feature generation");
  predict->add_flag("--dump-prompts", dump_prompts, "write each rendered prompt next to the predictions");

  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--out-dir", out_dir_override, "directory holding predictions and test split");
  eval->add_option("--predictions", predictions_override, "predictions file to score");
  eval->add_option("--alpha", alpha, "smoothing for retrieval probabilities");
  eval->add_option("--positive-letters", positive_letters,
                   "positive class per dimension, e.g. INTJ");

  CLI::App* ablate = app.add_subcommand("ablate", "run the rag/features/k ablation grid");
  ablate->add_option("--out-dir", out_dir_override, "directory holding the split files");
  ablate->add_option("--k-values", k_values, "k values to sweep (default 2 3 4 5 6)");

  // --config/--seed/--mock may appear after the subcommand name
  for (CLI::App* sub : {preprocess, index_build, index_query, smote, predict, eval, ablate}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    p2p::PipelineConfig config = load_config(globals);
    if (!corpus_override.empty()) config.corpus_path = corpus_override;
    if (!out_dir_override.empty()) config.out_dir = out_dir_override;
    if (!predictions_override.empty()) config.predictions_path = predictions_override;
    if (k_override > 0) config.k = k_override;
    if (alpha >= 0.0) config.eval_alpha = alpha;
    if (!positive_letters.empty()) config.positive_letters = positive_letters;
    if (no_rag) config.no_rag = true;
    if (no_features) config.no_features = true;
    if (dump_prompts) config.dump_prompts = true;

    if (preprocess->parsed()) {
      p2p::cmd_preprocess(config, std::cout);
    } else if (index_build->parsed()) {
      p2p::cmd_index_build(config, std::cout);
    } else if (index_query->parsed()) {
      p2p::cmd_index_query(config, query_text, std::cout);
    } else if (smote->parsed()) {
      p2p::cmd_smote(config, std::cout);
    } else if (predict->parsed()) {
      const p2p::PredictCmdResult result = p2p::cmd_predict(config, std::cout);
      if (!result.outcomes.empty() && result.failed == result.outcomes.size()) {
        std::cerr << "error: every user failed\n";
        return 1;
      }
    } else if (eval->parsed()) {
      p2p::cmd_eval(config, std::cout);
    } else if (ablate->parsed()) {
      if (k_values.empty()) k_values = {2, 3, 4, 5, 6};
      const p2p::AblateResult result = p2p::cmd_ablate(config, k_values, std::cout);
      for (const auto& cell : result.cells) {
        if (!cell.ok) return 1;
      }
    }
    return 0;
  } catch (const p2p::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
