#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "p2p/errors.hpp"

namespace p2p {

// Row-major matrix of token/segment vectors, one row per segment.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // rows * dim, row-major

  double at(std::size_t r, std::size_t c) const { return values[r * dim + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * dim + c]; }
};

// Pooled post embedding concatenated with the pooled feature embedding.
// Stored as f32 to match the on-disk index format.
struct UserVector {
  std::size_t post_part_dim = 0;
  std::size_t feature_part_dim = 0;
  std::vector<float> values;

  std::size_t width() const { return values.size(); }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Implementations must be deterministic and safe to call concurrently,
  // or document otherwise.
  virtual EmbeddingMatrix encode_posts(const std::string& text) const = 0;
  virtual EmbeddingMatrix encode_features(const std::string& text) const = 0;
  virtual std::size_t post_dim() const = 0;
  virtual std::size_t feature_dim() const = 0;
};

// Produces the interpretable psychological-assessment text for a user's posts.
class FeatureGenerator {
 public:
  virtual ~FeatureGenerator() = default;
  virtual std::string generate(const std::string& posts_text) const = 0;
};

// Column-wise arithmetic mean. Throws EmptyMatrixError on rows == 0.
std::vector<double> average_pool(const EmbeddingMatrix& m);

struct UserVectorOptions {
  bool with_features = true;      // ablation: drop the feature part entirely
  bool l2_normalize_parts = false;  // optional guard against mixed part scales
};

// average_pool(encode_posts(posts)) concatenated with
// average_pool(encode_features(features)). Feature part omitted when disabled.
UserVector build_user_vector(const std::string& posts_text, const std::string& features_text,
                             const EmbeddingProvider& provider,
                             const UserVectorOptions& options = {});

// Deterministic offline provider: values are a keyed hash of
// (seed, channel, text, row, column) expanded into [-1, 1].
// rows = min(16, 1 + word count).
std::unique_ptr<EmbeddingProvider> mock_provider(std::uint64_t seed, std::size_t post_dim,
                                                 std::size_t feature_dim);

// Deterministic offline assessment text keyed on the most frequent salient
// words of the input.
std::unique_ptr<FeatureGenerator> mock_feature_generator();

}  // namespace p2p
