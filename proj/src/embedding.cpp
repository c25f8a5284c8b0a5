#include "p2p/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace p2p {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1) from the top 53 bits.
double signed_unit(std::uint64_t h) {
  const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
  return unit * 2.0 - 1.0;
}

std::size_t word_count(const std::string& text) {
  std::istringstream ss(text);
  std::string w;
  std::size_t n = 0;
  while (ss >> w) ++n;
  return n;
}

class MockProvider final : public EmbeddingProvider {
 public:
  MockProvider(std::uint64_t seed, std::size_t post_dim, std::size_t feature_dim)
      : seed_(seed), post_dim_(post_dim), feature_dim_(feature_dim) {}

  EmbeddingMatrix encode_posts(const std::string& text) const override {
    return encode(text, 0, post_dim_);
  }
  EmbeddingMatrix encode_features(const std::string& text) const override {
    return encode(text, 1, feature_dim_);
  }
  std::size_t post_dim() const override { return post_dim_; }
  std::size_t feature_dim() const override { return feature_dim_; }

 private:
  EmbeddingMatrix encode(const std::string& text, unsigned char channel, std::size_t dim) const {
    EmbeddingMatrix m;
    m.rows = std::min<std::size_t>(16, 1 + word_count(text));
    m.dim = dim;
    m.values.resize(m.rows * dim);
    std::uint64_t key = kFnvOffset;
    key = fnv1a(key, &seed_, sizeof(seed_));
    key = fnv1a(key, &channel, 1);
    key = fnv1a(key, text.data(), text.size());
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        const std::uint64_t cell =
            splitmix64(key ^ (r * 0x9E3779B97F4A7C15ULL) ^ (c * 0xC2B2AE3D27D4EB4FULL));
        m.at(r, c) = signed_unit(cell);
      }
    }
    return m;
  }

  std::uint64_t seed_;
  std::size_t post_dim_;
  std::size_t feature_dim_;
};

class MockFeatureGen final : public FeatureGenerator {
 public:
  std::string generate(const std::string& posts_text) const override {
    // Pick the three most frequent tokens of length >= 4 (ties alphabetical).
    std::map<std::string, std::size_t> freq;
    std::istringstream ss(posts_text);
    std::string w;
    while (ss >> w) {
      if (w.size() >= 4) ++freq[w];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::string out = "This user writes";
    if (ranked.empty()) {
      out += " briefly and without recurring themes.";
    } else {
      out += " often about ";
      const std::size_t n = std::min<std::size_t>(3, ranked.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += (i + 1 == n) ? " and " : ", ";
        out += ranked[i].first;
      }
      out += ", with a consistent and personal tone.";
    }
    return out;
  }
};

}  // namespace

std::vector<double> average_pool(const EmbeddingMatrix& m) {
  if (m.rows == 0) throw EmptyMatrixError("cannot pool a matrix with zero rows");
  std::vector<double> pooled(m.dim, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.dim; ++c) pooled[c] += m.at(r, c);
  }
  const double inv = 1.0 / static_cast<double>(m.rows);
  for (double& v : pooled) v *= inv;
  return pooled;
}

namespace {

void append_part(std::vector<float>& out, const std::vector<double>& pooled, bool normalize) {
  double scale = 1.0;
  if (normalize) {
    double norm_sq = 0.0;
    for (double v : pooled) norm_sq += v * v;
    if (norm_sq > 0.0) scale = 1.0 / std::sqrt(norm_sq);
  }
  for (double v : pooled) out.push_back(static_cast<float>(v * scale));
}

}  // namespace

UserVector build_user_vector(const std::string& posts_text, const std::string& features_text,
                             const EmbeddingProvider& provider,
                             const UserVectorOptions& options) {
  if (posts_text.empty()) throw ProviderError("posts_text must be non-empty");
  UserVector uv;
  const std::vector<double> post_pooled = average_pool(provider.encode_posts(posts_text));
  uv.post_part_dim = post_pooled.size();
  append_part(uv.values, post_pooled, options.l2_normalize_parts);
  if (options.with_features) {
    const std::vector<double> feat_pooled = average_pool(provider.encode_features(features_text));
    uv.feature_part_dim = feat_pooled.size();
    append_part(uv.values, feat_pooled, options.l2_normalize_parts);
  }
  return uv;
}

std::unique_ptr<EmbeddingProvider> mock_provider(std::uint64_t seed, std::size_t post_dim,
                                                 std::size_t feature_dim) {
  return std::make_unique<MockProvider>(seed, post_dim, feature_dim);
}

std::unique_ptr<FeatureGenerator> mock_feature_generator() {
  return std::make_unique<MockFeatureGen>();
}

}  // namespace p2p
