#pragma once

#include <memory>
#include <string>

#include "p2p/embedding.hpp"
#include "p2p/rag.hpp"

namespace p2p {

// OpenAI-compatible embeddings endpoint. The bearer token is read from the
// named environment variable (never from config files).
struct HttpProviderConfig {
  std::string endpoint;  // e.g. http://localhost:8080/v1
  std::string post_model;
  std::string feature_model;  // empty -> post_model
  std::size_t post_dim = 0;
  std::size_t feature_dim = 0;
  int timeout_ms = 30000;
  std::string api_key_env = "P2P_EMBED_API_KEY";
};

// POSTs {"model": ..., "input": ...} to <endpoint>/embeddings and maps the
// response vectors into an EmbeddingMatrix. Throws TransportError on
// connection failure, ApiError on non-2xx status, DimensionMismatchError when
// the response width differs from the advertised one.
std::unique_ptr<EmbeddingProvider> http_provider(const HttpProviderConfig& config);

// Convenience for the single-model case.
std::unique_ptr<EmbeddingProvider> http_provider(const std::string& endpoint,
                                                 const std::string& model_name,
                                                 std::size_t post_dim, std::size_t feature_dim);

// OpenAI-compatible chat-completions endpoint with transport-level
// retry/backoff (exponential, base backoff_base_ms).
struct HttpLlmConfig {
  std::string endpoint;  // e.g. https://api.deepseek.com/v1
  std::string model;
  int timeout_ms = 60000;
  int transport_attempts = 3;
  int backoff_base_ms = 500;
  std::string api_key_env = "P2P_LLM_API_KEY";
};

std::unique_ptr<LlmClient> http_llm_client(const HttpLlmConfig& config);

// Feature generation through a chat endpoint: sends the feature-extraction
// prompt (with <CONTENT> replaced by the posts) and returns the raw reply.
class LlmFeatureGenerator final : public FeatureGenerator {
 public:
  LlmFeatureGenerator(std::shared_ptr<LlmClient> client, std::string prompt_template);
  std::string generate(const std::string& posts_text) const override;

 private:
  std::shared_ptr<LlmClient> client_;
  std::string prompt_template_;
};

}  // namespace p2p
