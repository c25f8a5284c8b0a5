#include "p2p/vector_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace p2p {

namespace {

constexpr std::array<char, 8> kMagic = {'P', '2', 'P', 'I', 'D', 'X', '\0', '\1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::size_t end) : data_(data), end_(end) {}

  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string bytes(std::size_t n) {
    require(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  void require(std::size_t n) {
    if (pos_ + n > end_) throw TruncatedFileError("index file ends mid-record");
  }

  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = seed ^ 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

double l2_distance(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double metric_distance(const Metric& m, std::span<const float> a, std::span<const float> b) {
  switch (m.kind) {
    case MetricKind::L2:
      return l2_distance(a, b);
    case MetricKind::Cosine:
      return 1.0 - cosine_similarity(a, b);
    case MetricKind::Combined:
      return m.weight_w * l2_distance(a, b) +
             (1.0 - m.weight_w) * (1.0 - cosine_similarity(a, b));
  }
  return 0.0;
}

std::uint64_t VectorIndex::add(std::vector<float> vector, std::string posts_text,
                               std::string feature_text, MbtiType label) {
  if (frozen_) throw Error("index is frozen");
  if (entries_.empty()) {
    if (vector.empty()) throw WidthMismatchError("vector width must be >= 1");
    width_ = vector.size();
  } else if (vector.size() != width_) {
    throw WidthMismatchError("expected width " + std::to_string(width_) + ", got " +
                             std::to_string(vector.size()));
  }
  for (float v : vector) {
    if (!std::isfinite(v)) throw NonFiniteVectorError("vector contains a non-finite value");
  }
  IndexEntry e;
  e.id = entries_.size();
  e.vector = std::move(vector);
  e.posts_text = std::move(posts_text);
  e.feature_text = std::move(feature_text);
  e.label = label;
  entries_.push_back(std::move(e));
  return entries_.back().id;
}

SearchResult VectorIndex::search(std::span<const float> query, std::size_t k,
                                 const Metric& metric) const {
  if (entries_.empty()) throw EmptyIndexError("search on an empty index");
  if (query.size() != width_) {
    throw WidthMismatchError("query width " + std::to_string(query.size()) +
                             " != index width " + std::to_string(width_));
  }
  std::vector<std::pair<double, std::uint64_t>> scored;
  scored.reserve(entries_.size());
  for (const auto& e : entries_) {
    scored.emplace_back(metric_distance(metric, query, e.vector), e.id);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end());
  SearchResult result;
  result.k = k;
  result.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) result.hits.emplace_back(scored[i].second, scored[i].first);
  return result;
}

void VectorIndex::save(const std::string& path) const {
  std::string buf;
  buf.append(kMagic.data(), kMagic.size());
  put_u32(buf, static_cast<std::uint32_t>(width_));
  put_u64(buf, entries_.size());
  for (const auto& e : entries_) {
    put_u64(buf, e.id);
    for (float v : e.vector) put_f32(buf, v);
    buf += e.label.str();
    put_u32(buf, static_cast<std::uint32_t>(e.posts_text.size()));
    buf += e.posts_text;
    put_u32(buf, static_cast<std::uint32_t>(e.feature_text.size()));
    buf += e.feature_text;
  }
  put_u32(buf, crc32(buf.data(), buf.size()));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write: " + tmp);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

VectorIndex VectorIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadableError("cannot open index file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < kMagic.size() + 4 + 8 + 4) throw TruncatedFileError("index file too short");
  if (std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CorruptFileError("bad magic or version");
  }
  const std::size_t body_end = data.size() - 4;
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_end])) |
      static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_end + 1])) << 8 |
      static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_end + 2])) << 16 |
      static_cast<std::uint32_t>(static_cast<unsigned char>(data[body_end + 3])) << 24;
  if (crc32(data.data(), body_end) != stored_crc) {
    throw CorruptFileError("checksum mismatch");
  }

  ByteReader reader(data, body_end);
  reader.bytes(kMagic.size());
  const std::uint32_t width = reader.u32();
  const std::uint64_t count = reader.u64();

  VectorIndex index;
  index.width_ = width;
  index.entries_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.id = reader.u64();
    if (e.id != i) throw CorruptFileError("entry ids not dense from 0");
    e.vector.resize(width);
    for (std::uint32_t j = 0; j < width; ++j) e.vector[j] = reader.f32();
    const std::string label = reader.bytes(4);
    try {
      e.label = parse_mbti(label, ParseMode::Strict);
    } catch (const InvalidTypeError&) {
      throw CorruptFileError("entry " + std::to_string(i) + " has invalid label");
    }
    e.posts_text = reader.bytes(reader.u32());
    e.feature_text = reader.bytes(reader.u32());
    index.entries_.push_back(std::move(e));
  }
  if (reader.remaining() != 0) throw CorruptFileError("trailing bytes after last entry");
  return index;
}

}  // namespace p2p
