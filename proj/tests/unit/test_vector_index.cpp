#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "p2p/vector_index.hpp"

using namespace p2p;
namespace fs = std::filesystem;

namespace {

MbtiType label(const char* s) { return parse_mbti(s); }

VectorIndex three_points() {
  VectorIndex index;
  index.add({0, 0}, "a", "", label("INFP"));
  index.add({3, 4}, "b", "", label("ENTP"));
  index.add({1, 0}, "c", "", label("INTJ"));
  return index;
}

// Independent oracle: recompute every distance its own way and sort.
std::vector<std::pair<std::uint64_t, double>> oracle_search(
    const std::vector<std::vector<float>>& vectors, const std::vector<float>& query, std::size_t k,
    const Metric& m) {
  std::vector<std::pair<double, std::uint64_t>> scored;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    double sq = 0.0, dot = 0.0, nq = 0.0, nv = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double d = double(query[j]) - double(v[j]);
      sq += d * d;
      dot += double(query[j]) * double(v[j]);
      nq += double(query[j]) * double(query[j]);
      nv += double(v[j]) * double(v[j]);
    }
    const double l2 = std::sqrt(sq);
    const double cos = (nq == 0.0 || nv == 0.0) ? 0.0 : dot / (std::sqrt(nq) * std::sqrt(nv));
    double dist = 0.0;
    switch (m.kind) {
      case MetricKind::L2: dist = l2; break;
      case MetricKind::Cosine: dist = 1.0 - cos; break;
      case MetricKind::Combined: dist = m.weight_w * l2 + (1.0 - m.weight_w) * (1.0 - cos); break;
    }
    scored.emplace_back(dist, i);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::pair<std::uint64_t, double>> hits;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
    hits.emplace_back(scored[i].second, scored[i].first);
  }
  return hits;
}

}  // namespace

TEST_CASE("add assigns dense ids and fixes the width") {
  VectorIndex index;
  CHECK(index.add({1, 2, 3}, "", "", label("INFP")) == 0);
  CHECK(index.width() == 3);
  CHECK(index.add({4, 5, 6}, "", "", label("ENTP")) == 1);
  CHECK_THROWS_AS(index.add({1, 2, 3, 4}, "", "", label("INFP")), WidthMismatchError);
  CHECK_THROWS_AS(index.add({1.0f, std::nanf(""), 3.0f}, "", "", label("INFP")),
                  NonFiniteVectorError);
  index.freeze();
  CHECK_THROWS_AS(index.add({1, 2, 3}, "", "", label("INFP")), Error);
}

TEST_CASE("L2 search returns hand-computed neighbors") {
  const VectorIndex index = three_points();
  const SearchResult r = index.search(std::vector<float>{0, 0}, 2, {MetricKind::L2, 0.5});
  REQUIRE(r.hits.size() == 2);
  CHECK(r.hits[0].first == 0);
  CHECK(r.hits[0].second == doctest::Approx(0.0));
  CHECK(r.hits[1].first == 2);
  CHECK(r.hits[1].second == doctest::Approx(1.0));
}

TEST_CASE("cosine search with orthogonal vectors") {
  VectorIndex index;
  index.add({1, 0}, "u", "", label("INFP"));
  index.add({0, 1}, "v", "", label("ENTP"));
  const SearchResult r = index.search(std::vector<float>{1, 0}, 2, {MetricKind::Cosine, 0.5});
  REQUIRE(r.hits.size() == 2);
  CHECK(r.hits[0].first == 0);
  CHECK(r.hits[0].second == doctest::Approx(0.0));
  CHECK(r.hits[1].first == 1);
  CHECK(r.hits[1].second == doctest::Approx(1.0));
}

TEST_CASE("combined metric uses the zero-norm cosine convention") {
  VectorIndex index;
  index.add({0, 0}, "a", "", label("INFP"));
  index.add({3, 4}, "b", "", label("ENTP"));
  const Metric combined{MetricKind::Combined, 0.5};
  const SearchResult r = index.search(std::vector<float>{0, 0}, 2, combined);
  REQUIRE(r.hits.size() == 2);
  CHECK(r.hits[0].first == 0);
  // cosine with the zero query is defined as 0, so even the self-match pays
  // the full cosine term
  CHECK(r.hits[0].second == doctest::Approx(0.5));
  CHECK(r.hits[1].first == 1);
  CHECK(r.hits[1].second == doctest::Approx(3.0));
}

TEST_CASE("ties break by ascending id") {
  VectorIndex index;
  index.add({1, 0}, "", "", label("INFP"));
  index.add({-1, 0}, "", "", label("ENTP"));
  index.add({0, 1}, "", "", label("INTJ"));
  const SearchResult r = index.search(std::vector<float>{0, 0}, 3, {MetricKind::L2, 0.5});
  REQUIRE(r.hits.size() == 3);
  CHECK(r.hits[0].first == 0);
  CHECK(r.hits[1].first == 1);
  CHECK(r.hits[2].first == 2);
}

TEST_CASE("k larger than the index returns everything sorted") {
  const VectorIndex index = three_points();
  const SearchResult r = index.search(std::vector<float>{0, 0}, 100, {MetricKind::L2, 0.5});
  CHECK(r.hits.size() == 3);
  CHECK(r.hits[0].second <= r.hits[1].second);
  CHECK(r.hits[1].second <= r.hits[2].second);
}

TEST_CASE("search errors") {
  VectorIndex empty;
  CHECK_THROWS_AS(empty.search(std::vector<float>{1.0f}, 1, {MetricKind::L2, 0.5}),
                  EmptyIndexError);
  const VectorIndex index = three_points();
  CHECK_THROWS_AS(index.search(std::vector<float>{1, 2, 3}, 1, {MetricKind::L2, 0.5}),
                  WidthMismatchError);
}

TEST_CASE("property: search matches the oracle on random data") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  const std::size_t n = 300, width = 16;
  VectorIndex index;
  std::vector<std::vector<float>> vectors;
  const auto& types = all_mbti_types();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(width);
    for (auto& x : v) x = value(rng);
    vectors.push_back(v);
    index.add(std::move(v), "", "", types[i % 16]);
  }
  const std::vector<Metric> metrics = {{MetricKind::L2, 0.5},
                                       {MetricKind::Cosine, 0.5},
                                       {MetricKind::Combined, 0.5}};
  for (int q = 0; q < 20; ++q) {
    std::vector<float> query(width);
    for (auto& x : query) x = value(rng);
    for (const Metric& m : metrics) {
      for (std::size_t k : {1u, 5u, 10u}) {
        const SearchResult got = index.search(query, k, m);
        const auto expected = oracle_search(vectors, query, k, m);
        REQUIRE(got.hits.size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
          CHECK(got.hits[i].first == expected[i].first);
        }
      }
    }
  }
}

TEST_CASE("Combined(1) orders like L2 and Combined(0) like Cosine") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  VectorIndex index;
  for (int i = 0; i < 64; ++i) {
    std::vector<float> v(8);
    for (auto& x : v) x = value(rng);
    index.add(std::move(v), "", "", label("INFP"));
  }
  std::vector<float> query(8);
  for (auto& x : query) x = value(rng);

  auto ids = [](const SearchResult& r) {
    std::vector<std::uint64_t> out;
    for (const auto& h : r.hits) out.push_back(h.first);
    return out;
  };
  CHECK(ids(index.search(query, 64, {MetricKind::L2, 0.5})) ==
        ids(index.search(query, 64, {MetricKind::Combined, 1.0})));
  CHECK(ids(index.search(query, 64, {MetricKind::Cosine, 0.5})) ==
        ids(index.search(query, 64, {MetricKind::Combined, 0.0})));
}

TEST_CASE("frozen index serves concurrent searches") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  VectorIndex index;
  for (int i = 0; i < 128; ++i) {
    std::vector<float> v(8);
    for (auto& x : v) x = value(rng);
    index.add(std::move(v), "", "", label("INFP"));
  }
  index.freeze();

  std::vector<std::vector<float>> queries(16, std::vector<float>(8));
  for (auto& q : queries) {
    for (auto& x : q) x = value(rng);
  }
  std::vector<SearchResult> serial;
  for (const auto& q : queries) serial.push_back(index.search(q, 5, {MetricKind::L2, 0.5}));

  std::vector<SearchResult> parallel(queries.size());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < queries.size(); i += 4) {
        parallel[i] = index.search(queries[i], 5, {MetricKind::L2, 0.5});
      }
    });
  }
  for (auto& t : threads) t.join();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CHECK(parallel[i].hits == serial[i].hits);
  }
}

TEST_CASE("save/load round-trips bit-exactly") {
  std::mt19937 rng(55);
  std::uniform_real_distribution<float> value(-5.0f, 5.0f);
  VectorIndex index;
  const auto& types = all_mbti_types();
  for (int i = 0; i < 100; ++i) {
    std::vector<float> v(12);
    for (auto& x : v) x = value(rng);
    index.add(std::move(v), "posts " + std::to_string(i), "feat\xc3\xa9 " + std::to_string(i),
              types[i % 16]);
  }
  const std::string path = (fs::temp_directory_path() / "p2p_index_rt.p2pidx").string();
  index.save(path);
  const VectorIndex loaded = VectorIndex::load(path);
  REQUIRE(loaded.size() == index.size());
  CHECK(loaded.width() == index.width());
  for (std::size_t i = 0; i < index.size(); ++i) {
    CHECK(loaded.entry(i).vector == index.entry(i).vector);  // bit-exact floats
    CHECK(loaded.entry(i).posts_text == index.entry(i).posts_text);
    CHECK(loaded.entry(i).feature_text == index.entry(i).feature_text);
    CHECK(loaded.entry(i).label == index.entry(i).label);
  }

  // byte-identical re-serialization
  const std::string path2 = (fs::temp_directory_path() / "p2p_index_rt2.p2pidx").string();
  loaded.save(path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("empty index round-trips") {
  VectorIndex index;
  const std::string path = (fs::temp_directory_path() / "p2p_index_empty.p2pidx").string();
  index.save(path);
  const VectorIndex loaded = VectorIndex::load(path);
  CHECK(loaded.size() == 0);
  fs::remove(path);
}

TEST_CASE("corrupted files are rejected") {
  VectorIndex index;
  index.add({1, 2}, "p", "f", label("INFP"));
  const std::string path = (fs::temp_directory_path() / "p2p_index_corrupt.p2pidx").string();
  index.save(path);

  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  SUBCASE("bad magic") {
    std::string bad = data;
    bad[0] = 'X';
    std::ofstream out(path, std::ios::binary);
    out << bad;
    out.close();
    CHECK_THROWS_AS(VectorIndex::load(path), CorruptFileError);
  }
  SUBCASE("bad version byte") {
    std::string bad = data;
    bad[7] = '\2';
    std::ofstream out(path, std::ios::binary);
    out << bad;
    out.close();
    CHECK_THROWS_AS(VectorIndex::load(path), CorruptFileError);
  }
  SUBCASE("flipped payload byte breaks the checksum") {
    std::string bad = data;
    bad[20] = static_cast<char>(bad[20] ^ 0x01);
    std::ofstream out(path, std::ios::binary);
    out << bad;
    out.close();
    CHECK_THROWS_AS(VectorIndex::load(path), CorruptFileError);
  }
  SUBCASE("truncated file") {
    std::string bad = data.substr(0, 10);
    std::ofstream out(path, std::ios::binary);
    out << bad;
    out.close();
    CHECK_THROWS_AS(VectorIndex::load(path), TruncatedFileError);
  }
  fs::remove(path);
}
