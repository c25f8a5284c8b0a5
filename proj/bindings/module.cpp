#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "p2p/embedding.hpp"
#include "p2p/errors.hpp"
#include "p2p/eval.hpp"
#include "p2p/mbti.hpp"
#include "p2p/rag.hpp"
#include "p2p/smote.hpp"
#include "p2p/text.hpp"
#include "p2p/vector_index.hpp"

namespace py = pybind11;
using namespace p2p;

namespace {

Metric make_metric(const std::string& kind, double w) {
  Metric m;
  if (kind == "l2") {
    m.kind = MetricKind::L2;
  } else if (kind == "cosine") {
    m.kind = MetricKind::Cosine;
  } else if (kind == "combined") {
    m.kind = MetricKind::Combined;
  } else {
    throw ConfigError("unknown metric kind: " + kind);
  }
  m.weight_w = w;
  return m;
}

EmbeddingMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw EmptyMatrixError("matrix needs at least one row");
  EmbeddingMatrix m;
  m.rows = rows.size();
  m.dim = rows[0].size();
  m.values.reserve(m.rows * m.dim);
  for (const auto& row : rows) {
    if (row.size() != m.dim) throw ShapeMismatchError("ragged rows");
    m.values.insert(m.values.end(), row.begin(), row.end());
  }
  return m;
}

std::vector<std::vector<double>> matrix_to_rows(const EmbeddingMatrix& m) {
  std::vector<std::vector<double>> rows(m.rows, std::vector<double>(m.dim));
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.dim; ++c) rows[r][c] = m.at(r, c);
  }
  return rows;
}

SmoteMode mode_from(const std::string& mode) {
  if (mode == "paper") return SmoteMode::Paper;
  if (mode == "classic") return SmoteMode::Classic;
  throw ConfigError("unknown smote mode: " + mode);
}

WordMapper lemmatizer_from(const std::string& name) {
  if (name == "identity") return identity_lemmatizer();
  if (name == "suffix") return suffix_lemmatizer();
  throw ConfigError("unknown lemmatizer: " + name);
}

}  // namespace

PYBIND11_MODULE(_p2p, m) {
  m.doc() = "RAG-based MBTI prediction pipeline: core operations";

  py::register_exception<Error>(m, "P2PError");

  // core label model
  m.def(
      "parse_mbti",
      [](const std::string& text, bool strict) {
        return parse_mbti(text, strict ? ParseMode::Strict : ParseMode::Lenient).str();
      },
      py::arg("text"), py::arg("strict") = true);
  m.def("mbti_to_dims", [](const std::string& t) {
    const auto bits = mbti_to_dims(parse_mbti(t));
    return std::vector<int>(bits.begin(), bits.end());
  });
  m.def("dims_to_mbti", [](const std::vector<int>& bits) {
    if (bits.size() != 4) throw InvalidTypeError("expected 4 bits");
    return dims_to_mbti({bits[0], bits[1], bits[2], bits[3]}).str();
  });
  m.def("all_mbti_types", [] {
    std::vector<std::string> out;
    for (const auto& t : all_mbti_types()) out.push_back(t.str());
    return out;
  });

  // preprocessing
  m.def(
      "normalize_text",
      [](const std::string& raw, std::optional<std::vector<std::string>> stopwords,
         const std::string& lemmatizer) {
        if (stopwords) {
          const StopwordSet set(stopwords->begin(), stopwords->end());
          return normalize_text(raw, set, lemmatizer_from(lemmatizer));
        }
        return normalize_text(raw, builtin_stopwords(), lemmatizer_from(lemmatizer));
      },
      py::arg("raw"), py::arg("stopwords") = std::nullopt, py::arg("lemmatizer") = "suffix");
  m.def("split_posts", [](const std::string& joined) { return split_posts(joined); });

  // embedding
  m.def("average_pool",
        [](const std::vector<std::vector<double>>& rows) { return average_pool(matrix_from_rows(rows)); });

  py::class_<EmbeddingProvider, std::shared_ptr<EmbeddingProvider>>(m, "EmbeddingProvider")
      .def("encode_posts",
           [](const EmbeddingProvider& p, const std::string& text) {
             return matrix_to_rows(p.encode_posts(text));
           })
      .def("encode_features",
           [](const EmbeddingProvider& p, const std::string& text) {
             return matrix_to_rows(p.encode_features(text));
           })
      .def_property_readonly("post_dim", &EmbeddingProvider::post_dim)
      .def_property_readonly("feature_dim", &EmbeddingProvider::feature_dim);

  m.def(
      "mock_provider",
      [](std::uint64_t seed, std::size_t post_dim, std::size_t feature_dim) {
        return std::shared_ptr<EmbeddingProvider>(mock_provider(seed, post_dim, feature_dim));
      },
      py::arg("seed"), py::arg("post_dim") = 16, py::arg("feature_dim") = 8);

  m.def("mock_feature_text", [](const std::string& posts_text) {
    return mock_feature_generator()->generate(posts_text);
  });

  py::class_<UserVector>(m, "UserVector")
      .def_readonly("post_part_dim", &UserVector::post_part_dim)
      .def_readonly("feature_part_dim", &UserVector::feature_part_dim)
      .def_readonly("values", &UserVector::values)
      .def("__len__", [](const UserVector& v) { return v.width(); });

  m.def(
      "build_user_vector",
      [](const std::string& posts, const std::string& features,
         const std::shared_ptr<EmbeddingProvider>& provider, bool with_features,
         bool l2_normalize_parts) {
        UserVectorOptions opts;
        opts.with_features = with_features;
        opts.l2_normalize_parts = l2_normalize_parts;
        return build_user_vector(posts, features, *provider, opts);
      },
      py::arg("posts"), py::arg("features"), py::arg("provider"), py::arg("with_features") = true,
      py::arg("l2_normalize_parts") = false);

  // vector index
  py::class_<VectorIndex>(m, "VectorIndex")
      .def(py::init<>())
      .def(
          "add",
          [](VectorIndex& index, std::vector<float> vector, const std::string& posts,
             const std::string& features, const std::string& label) {
            return index.add(std::move(vector), posts, features, parse_mbti(label));
          },
          py::arg("vector"), py::arg("posts") = "", py::arg("features") = "", py::arg("label") = "INFP")
      .def(
          "search",
          [](const VectorIndex& index, const std::vector<float>& query, std::size_t k,
             const std::string& metric, double w) {
            const SearchResult r = index.search(query, k, make_metric(metric, w));
            return r.hits;
          },
          py::arg("query"), py::arg("k") = 5, py::arg("metric") = "l2", py::arg("w") = 0.5)
      .def("freeze", &VectorIndex::freeze)
      .def("save", &VectorIndex::save)
      .def_static("load", &VectorIndex::load)
      .def(
          "entry",
          [](const VectorIndex& index, std::uint64_t id) {
            const IndexEntry& e = index.entry(id);
            return py::make_tuple(e.label.str(), e.posts_text, e.feature_text, e.vector);
          },
          py::arg("id"))
      .def("__len__", &VectorIndex::size)
      .def_property_readonly("width", &VectorIndex::width);

  // smote
  m.def(
      "synthesize",
      [](const std::vector<std::vector<double>>& x_i, const std::vector<std::vector<double>>& x_j,
         double lam, const std::string& mode) {
        return matrix_to_rows(
            synthesize(matrix_from_rows(x_i), matrix_from_rows(x_j), lam, mode_from(mode)));
      },
      py::arg("x_i"), py::arg("x_j"), py::arg("lam"), py::arg("mode") = "paper");

  m.def(
      "oversample",
      [](const std::vector<std::vector<double>>& pooled, const std::vector<std::string>& labels,
         std::size_t neighbor_k, double w, std::uint64_t seed, const std::string& mode,
         std::optional<std::size_t> target) {
        if (pooled.size() != labels.size()) throw ShapeMismatchError("pooled/labels size mismatch");
        std::vector<LabeledEmbedding> data;
        data.reserve(pooled.size());
        for (std::size_t i = 0; i < pooled.size(); ++i) {
          data.push_back(make_labeled_embedding(static_cast<std::int64_t>(i),
                                                matrix_from_rows({pooled[i]}),
                                                parse_mbti(labels[i])));
        }
        SmotePlan plan;
        plan.neighbor_k = neighbor_k;
        plan.weight_w = w;
        plan.seed = seed;
        plan.mode = mode_from(mode);
        if (target) plan.target_count = *target;
        const SmoteResult result = oversample(data, plan);
        py::list out;
        for (const auto& rec : result.samples) {
          py::dict d;
          d["label"] = rec.embedding.label.str();
          d["base_id"] = rec.base_id;
          d["neighbor_id"] = rec.neighbor_id;
          d["lambda"] = rec.lambda;
          d["values"] = rec.embedding.representation.values;
          out.append(d);
        }
        return out;
      },
      py::arg("pooled"), py::arg("labels"), py::arg("neighbor_k") = 5, py::arg("w") = 0.5,
      py::arg("seed") = 0, py::arg("mode") = "paper", py::arg("target") = std::nullopt);

  // rag
  m.def(
      "render_prompt",
      [](const std::string& posts, const std::string& features,
         const std::vector<std::tuple<std::string, std::string, double>>& demos,
         std::optional<std::string> body, std::optional<std::string> demo_item) {
        PromptTemplate tmpl = PromptTemplate::default_template();
        if (body) tmpl.body = *body;
        if (demo_item) tmpl.demo_item = *demo_item;
        std::vector<Demonstration> ds;
        ds.reserve(demos.size());
        for (const auto& [p, label, dist] : demos) ds.push_back({p, parse_mbti(label), dist});
        return render_prompt(posts, features, ds, tmpl);
      },
      py::arg("posts"), py::arg("features"), py::arg("demos"),
      py::arg("body") = std::nullopt, py::arg("demo_item") = std::nullopt);

  // eval
  m.def(
      "approx_probability",
      [](const std::vector<std::string>& demo_labels, int dim, double alpha,
         const std::string& positive_letters) {
        if (dim < 0 || dim > 3) throw ConfigError("dim must be 0..3");
        std::vector<Demonstration> demos;
        demos.reserve(demo_labels.size());
        for (const auto& label : demo_labels) demos.push_back({"", parse_mbti(label), 0.0});
        return approx_probability(demos, static_cast<Dimension>(dim), alpha,
                                  positive_letters.at(static_cast<std::size_t>(dim)));
      },
      py::arg("demo_labels"), py::arg("dim"), py::arg("alpha") = 1.0,
      py::arg("positive_letters") = "INTJ");
  m.def(
      "f1_binary",
      [](const std::vector<std::pair<int, int>>& pairs, int positive) {
        return f1_binary(pairs, positive);
      },
      py::arg("pairs"), py::arg("positive") = 1);
  m.def("auc", [](const std::vector<std::pair<int, double>>& scored) { return auc(scored); });
}
