#include "p2p/http_clients.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

using nlohmann::json;

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.origin = url;
  } else {
    parsed.origin = url.substr(0, path_start);
    parsed.prefix = url.substr(path_start);
    while (!parsed.prefix.empty() && parsed.prefix.back() == '/') parsed.prefix.pop_back();
  }
  return parsed;
}

std::string body_excerpt(const std::string& body) {
  return body.size() <= 200 ? body : body.substr(0, 200) + "...";
}

httplib::Headers auth_headers(const std::string& api_key_env) {
  httplib::Headers headers;
  if (const char* key = std::getenv(api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  return headers;
}

json post_json(const ParsedUrl& url, const std::string& path, const json& payload,
               const std::string& api_key_env, int timeout_ms) {
  httplib::Client client(url.origin);
  client.set_connection_timeout(0, timeout_ms * 1000);
  client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
  auto res = client.Post(url.prefix + path, auth_headers(api_key_env), payload.dump(),
                         "application/json");
  if (!res) {
    throw TransportError("request to " + url.origin + url.prefix + path + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ApiError(res->status, body_excerpt(res->body));
  }
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw ApiError(res->status, "response is not valid JSON");
  return parsed;
}

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpProviderConfig config)
      : config_(std::move(config)), url_(parse_url(config_.endpoint)) {
    if (config_.feature_model.empty()) config_.feature_model = config_.post_model;
  }

  EmbeddingMatrix encode_posts(const std::string& text) const override {
    return encode(text, config_.post_model, config_.post_dim);
  }
  EmbeddingMatrix encode_features(const std::string& text) const override {
    return encode(text, config_.feature_model, config_.feature_dim);
  }
  std::size_t post_dim() const override { return config_.post_dim; }
  std::size_t feature_dim() const override { return config_.feature_dim; }

 private:
  EmbeddingMatrix encode(const std::string& text, const std::string& model,
                         std::size_t expected_dim) const {
    const json payload = {{"model", model}, {"input", text}};
    const json response =
        post_json(url_, "/embeddings", payload, config_.api_key_env, config_.timeout_ms);
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].empty()) {
      throw ApiError(200, "embeddings response lacks a data array");
    }
    EmbeddingMatrix m;
    m.rows = response["data"].size();
    for (const auto& item : response["data"]) {
      if (!item.contains("embedding") || !item["embedding"].is_array()) {
        throw ApiError(200, "embeddings entry lacks an embedding array");
      }
      const auto& vec = item["embedding"];
      if (m.dim == 0) {
        m.dim = vec.size();
        m.values.reserve(m.rows * m.dim);
      } else if (vec.size() != m.dim) {
        throw DimensionMismatchError("ragged embedding rows in response");
      }
      for (const auto& v : vec) m.values.push_back(v.get<double>());
    }
    if (expected_dim != 0 && m.dim != expected_dim) {
      throw DimensionMismatchError("endpoint returned width " + std::to_string(m.dim) +
                                   ", expected " + std::to_string(expected_dim));
    }
    return m;
  }

  HttpProviderConfig config_;
  ParsedUrl url_;
};

class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig config)
      : config_(std::move(config)), url_(parse_url(config_.endpoint)) {}

  std::string complete(const std::string& prompt) override {
    const json payload = {{"model", config_.model},
                          {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    const int attempts = std::max(1, config_.transport_attempts);
    for (int attempt = 0;; ++attempt) {
      try {
        const json response = post_json(url_, "/chat/completions", payload, config_.api_key_env,
                                        config_.timeout_ms);
        if (!response.contains("choices") || response["choices"].empty()) {
          throw ApiError(200, "chat response lacks choices");
        }
        const auto& message = response["choices"][0]["message"];
        return message.at("content").get<std::string>();
      } catch (const TransportError&) {
        if (attempt + 1 >= attempts) throw;
      } catch (const ApiError& e) {
        // retry server-side failures, fail fast on client errors
        if (e.status() < 500 && e.status() != 429) throw;
        if (attempt + 1 >= attempts) throw;
      }
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config_.backoff_base_ms * (1LL << attempt)));
    }
  }

  std::string model_name() const override { return config_.model; }

 private:
  HttpLlmConfig config_;
  ParsedUrl url_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> http_provider(const HttpProviderConfig& config) {
  return std::make_unique<HttpEmbeddingProvider>(config);
}

std::unique_ptr<EmbeddingProvider> http_provider(const std::string& endpoint,
                                                 const std::string& model_name,
                                                 std::size_t post_dim, std::size_t feature_dim) {
  HttpProviderConfig config;
  config.endpoint = endpoint;
  config.post_model = model_name;
  config.feature_model = model_name;
  config.post_dim = post_dim;
  config.feature_dim = feature_dim;
  return http_provider(config);
}

std::unique_ptr<LlmClient> http_llm_client(const HttpLlmConfig& config) {
  return std::make_unique<HttpLlmClient>(config);
}

LlmFeatureGenerator::LlmFeatureGenerator(std::shared_ptr<LlmClient> client,
                                         std::string prompt_template)
    : client_(std::move(client)), prompt_template_(std::move(prompt_template)) {
  if (prompt_template_.find("<CONTENT>") == std::string::npos) {
    throw MissingPlaceholderError("feature prompt template lacks <CONTENT>");
  }
}

std::string LlmFeatureGenerator::generate(const std::string& posts_text) const {
  std::string prompt = prompt_template_;
  const std::size_t pos = prompt.find("<CONTENT>");
  prompt.replace(pos, 9, posts_text);
  return client_->complete(prompt);
}

}  // namespace p2p
