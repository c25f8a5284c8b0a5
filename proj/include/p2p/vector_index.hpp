#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "p2p/errors.hpp"
#include "p2p/mbti.hpp"

namespace p2p {

enum class MetricKind { L2, Cosine, Combined };

// Distance used for retrieval. Combined mixes the two:
//   d = w * L2 + (1 - w) * (1 - cosine_similarity).
// Cosine similarity is defined as 0 when either operand has zero norm, which
// keeps Combined finite on degenerate inputs.
struct Metric {
  MetricKind kind = MetricKind::L2;
  double weight_w = 0.5;  // Combined only
};

double l2_distance(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const float> a, std::span<const float> b);
double metric_distance(const Metric& m, std::span<const float> a, std::span<const float> b);

struct IndexEntry {
  std::uint64_t id = 0;
  std::vector<float> vector;
  std::string posts_text;
  std::string feature_text;
  MbtiType label;
};

struct SearchResult {
  std::vector<std::pair<std::uint64_t, double>> hits;  // (id, distance), ascending
  std::size_t k = 0;
};

// Exact k-NN store over user vectors. Single-writer while building; freeze()
// it before sharing across search threads. The retrieval metric is runtime
// configuration and is not persisted.
class VectorIndex {
 public:
  // First insert fixes the vector width. Returns the assigned id (= previous
  // size). Throws WidthMismatchError / NonFiniteVectorError; adding to a
  // frozen index throws Error.
  std::uint64_t add(std::vector<float> vector, std::string posts_text, std::string feature_text,
                    MbtiType label);

  // Exact linear scan; the k smallest distances, ties broken by ascending id.
  // hits length = min(k, size). Throws EmptyIndexError / WidthMismatchError.
  SearchResult search(std::span<const float> query, std::size_t k, const Metric& metric) const;
  SearchResult search(std::span<const float> query, std::size_t k) const {
    return search(query, k, metric_);
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  void set_metric(const Metric& m) { metric_ = m; }
  const Metric& metric() const { return metric_; }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t width() const { return width_; }
  const IndexEntry& entry(std::uint64_t id) const { return entries_.at(id); }
  const std::vector<IndexEntry>& entries() const { return entries_; }

  // Little-endian binary format:
  //   magic "P2PIDX\0\1" | u32 width | u64 count
  //   per entry: u64 id | width×f32 | 4-byte ASCII label
  //              | u32 len + posts_text | u32 len + feature_text
  //   trailing u32 CRC32 over all preceding bytes.
  // save() writes to a temp file and renames, so failures leave no partial
  // output. load(save(x)) reproduces vectors bit-exactly.
  void save(const std::string& path) const;
  static VectorIndex load(const std::string& path);

 private:
  std::vector<IndexEntry> entries_;
  std::size_t width_ = 0;
  bool frozen_ = false;
  Metric metric_{};
};

// CRC-32 (IEEE), used by the index file trailer.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace p2p
