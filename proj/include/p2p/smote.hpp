#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "p2p/embedding.hpp"
#include "p2p/mbti.hpp"

namespace p2p {

struct LabeledEmbedding {
  std::int64_t id = 0;
  EmbeddingMatrix representation;  // per-user hidden representation
  std::vector<double> pooled;      // average_pool(representation)
  MbtiType label;
  bool synthetic = false;
};

LabeledEmbedding make_labeled_embedding(std::int64_t id, EmbeddingMatrix representation,
                                        MbtiType label);

enum class SmoteMode {
  Paper,    // x_i + lambda * (x_i - x_j): extrapolates away from the neighbor
  Classic,  // x_i + lambda * (x_j - x_i): interpolates toward it
};

struct SmotePlan {
  // Empty set -> every label present except the most frequent one.
  std::set<MbtiType> minority_labels;
  // Per-minority-label goal; unset -> the majority label's count.
  std::optional<std::size_t> target_count;
  std::size_t neighbor_k = 5;
  double weight_w = 0.5;
  std::uint64_t seed = 0;
  SmoteMode mode = SmoteMode::Paper;
};

// Among same-label elements of pool (excluding index `self`), the k nearest
// under d = w*L2(pooled) + (1-w)*(1 - cos(pooled)), ties by ascending id.
// Returns fewer than k when the label group is small; throws
// NoSameLabelNeighborError when the group has a single member.
std::vector<std::int64_t> find_neighbors(std::size_t self,
                                         const std::vector<LabeledEmbedding>& pool, std::size_t k,
                                         double w);

// Elementwise line step between two equal-shape matrices (ShapeMismatchError
// otherwise). lambda in [0, 1].
EmbeddingMatrix synthesize(const EmbeddingMatrix& x_i, const EmbeddingMatrix& x_j, double lambda,
                           SmoteMode mode);

// Pads with zero rows or truncates to exactly `rows` rows; callers that want
// matrix-shape synthesis over variable-length inputs go through this first.
EmbeddingMatrix pad_or_truncate_rows(const EmbeddingMatrix& m, std::size_t rows);

struct SyntheticRecord {
  LabeledEmbedding embedding;
  std::int64_t base_id = 0;
  std::int64_t neighbor_id = 0;
  double lambda = 0.0;
};

struct LabelCounts {
  std::size_t before = 0;
  std::size_t after = 0;
};

struct SmoteResult {
  std::vector<SyntheticRecord> samples;
  std::vector<std::string> warnings;
  std::map<MbtiType, LabelCounts> counts;
};

// Deterministic given plan.seed. For each minority label, emits
// (target - current) synthetics: bases round-robin in id order, lambda drawn
// uniform [0,1), neighbor drawn uniformly from the base's top-k same-label
// set. Single-member groups fall back to duplicating the lone sample with
// +/-1e-6 jitter (warned). Targets below the current count emit nothing and
// warn.
SmoteResult oversample(const std::vector<LabeledEmbedding>& data, const SmotePlan& plan);

// One record per line:
//   label<TAB>base_id<TAB>neighbor_id<TAB>lambda<TAB>v0,v1,...
// Values carry enough digits to re-parse at f32 precision. Returns the number
// of records written.
std::size_t export_synthetics(const std::vector<SyntheticRecord>& samples,
                              const std::string& path);

}  // namespace p2p
