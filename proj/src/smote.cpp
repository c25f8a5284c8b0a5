#include "p2p/smote.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

double pooled_distance(const std::vector<double>& a, const std::vector<double>& b, double w) {
  double sq = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double cos_sim = (na == 0.0 || nb == 0.0) ? 0.0 : dot / (std::sqrt(na) * std::sqrt(nb));
  return w * std::sqrt(sq) + (1.0 - w) * (1.0 - cos_sim);
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace

LabeledEmbedding make_labeled_embedding(std::int64_t id, EmbeddingMatrix representation,
                                        MbtiType label) {
  LabeledEmbedding e;
  e.id = id;
  e.pooled = average_pool(representation);
  e.representation = std::move(representation);
  e.label = label;
  return e;
}

std::vector<std::int64_t> find_neighbors(std::size_t self,
                                         const std::vector<LabeledEmbedding>& pool, std::size_t k,
                                         double w) {
  const LabeledEmbedding& anchor = pool[self];
  std::vector<std::pair<double, std::int64_t>> scored;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i == self || pool[i].label != anchor.label) continue;
    scored.emplace_back(pooled_distance(anchor.pooled, pool[i].pooled, w), pool[i].id);
  }
  if (scored.empty()) {
    throw NoSameLabelNeighborError("label " + anchor.label.str() + " has a single member");
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + take, scored.end());
  std::vector<std::int64_t> ids;
  ids.reserve(take);
  for (std::size_t i = 0; i < take; ++i) ids.push_back(scored[i].second);
  return ids;
}

EmbeddingMatrix synthesize(const EmbeddingMatrix& x_i, const EmbeddingMatrix& x_j, double lambda,
                           SmoteMode mode) {
  if (x_i.rows != x_j.rows || x_i.dim != x_j.dim) {
    throw ShapeMismatchError("shapes differ: " + std::to_string(x_i.rows) + "x" +
                             std::to_string(x_i.dim) + " vs " + std::to_string(x_j.rows) + "x" +
                             std::to_string(x_j.dim));
  }
  EmbeddingMatrix out;
  out.rows = x_i.rows;
  out.dim = x_i.dim;
  out.values.resize(x_i.values.size());
  for (std::size_t n = 0; n < x_i.values.size(); ++n) {
    if (mode == SmoteMode::Paper) {
      out.values[n] = x_i.values[n] + lambda * (x_i.values[n] - x_j.values[n]);
    } else {
      // std::lerp hits the endpoints exactly: lambda=1 reproduces x_j bit for bit
      out.values[n] = std::lerp(x_i.values[n], x_j.values[n], lambda);
    }
  }
  return out;
}

EmbeddingMatrix pad_or_truncate_rows(const EmbeddingMatrix& m, std::size_t rows) {
  EmbeddingMatrix out;
  out.rows = rows;
  out.dim = m.dim;
  out.values.assign(rows * m.dim, 0.0);
  const std::size_t copy_rows = std::min(rows, m.rows);
  std::copy_n(m.values.begin(), copy_rows * m.dim, out.values.begin());
  return out;
}

SmoteResult oversample(const std::vector<LabeledEmbedding>& data, const SmotePlan& plan) {
  if (data.empty()) throw EmptyCorpusError("oversample on empty data");

  std::map<MbtiType, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) groups[data[i].label].push_back(i);

  // Majority label: highest count, ties by type string.
  MbtiType majority = groups.begin()->first;
  std::size_t majority_count = 0;
  for (const auto& [label, members] : groups) {
    if (members.size() > majority_count) {
      majority = label;
      majority_count = members.size();
    }
  }

  std::set<MbtiType> minority = plan.minority_labels;
  if (minority.empty()) {
    for (const auto& [label, members] : groups) {
      if (label != majority) minority.insert(label);
    }
  }

  SmoteResult result;
  for (const auto& [label, members] : groups) {
    result.counts[label] = {members.size(), members.size()};
  }

  std::mt19937_64 rng(plan.seed);
  std::int64_t next_id = 0;
  for (const auto& e : data) next_id = std::max(next_id, e.id + 1);

  for (const MbtiType& label : minority) {
    auto it = groups.find(label);
    if (it == groups.end()) {
      throw EmptyCorpusError("minority label " + label.str() + " absent from data");
    }
    std::vector<std::size_t> bases = it->second;
    std::sort(bases.begin(), bases.end(), [&data](std::size_t a, std::size_t b) {
      return data[a].id < data[b].id;
    });
    const std::size_t current = bases.size();
    const std::size_t target = plan.target_count.value_or(majority_count);
    if (target < current) {
      result.warnings.push_back("label " + label.str() + ": target " + std::to_string(target) +
                                " below current count " + std::to_string(current) +
                                ", emitting nothing");
      continue;
    }
    const std::size_t need = target - current;
    result.counts[label].after = current + need;

    for (std::size_t draw = 0; draw < need; ++draw) {
      const std::size_t base_idx = bases[draw % bases.size()];
      const LabeledEmbedding& base = data[base_idx];
      const double lambda = uniform_unit(rng);

      SyntheticRecord rec;
      rec.base_id = base.id;
      rec.lambda = lambda;
      if (current == 1) {
        // Lone sample: duplicate with small seeded jitter.
        EmbeddingMatrix jittered = base.representation;
        for (double& v : jittered.values) v += (uniform_unit(rng) * 2.0 - 1.0) * 1e-6;
        rec.neighbor_id = base.id;
        rec.embedding = make_labeled_embedding(next_id++, std::move(jittered), label);
        if (draw == 0) {
          result.warnings.push_back("label " + label.str() +
                                    ": single member, duplicating with jitter");
        }
      } else {
        const std::vector<std::int64_t> neighbors =
            find_neighbors(base_idx, data, plan.neighbor_k, plan.weight_w);
        const std::int64_t neighbor_id =
            neighbors[static_cast<std::size_t>(rng() % neighbors.size())];
        const LabeledEmbedding* neighbor = nullptr;
        for (std::size_t idx : it->second) {
          if (data[idx].id == neighbor_id) {
            neighbor = &data[idx];
            break;
          }
        }
        rec.neighbor_id = neighbor_id;
        rec.embedding = make_labeled_embedding(
            next_id++, synthesize(base.representation, neighbor->representation, lambda, plan.mode),
            label);
      }
      rec.embedding.synthetic = true;
      result.samples.push_back(std::move(rec));
    }
  }
  return result;
}

std::size_t export_synthetics(const std::vector<SyntheticRecord>& samples,
                              const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + tmp);
    char buf[64];
    for (const auto& rec : samples) {
      out << rec.embedding.label.str() << '\t' << rec.base_id << '\t' << rec.neighbor_id << '\t';
      std::snprintf(buf, sizeof(buf), "%.17g", rec.lambda);
      out << buf << '\t';
      const auto& values = rec.embedding.representation.values;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out.put(',');
        std::snprintf(buf, sizeof(buf), "%.9g", values[i]);
        out << buf;
      }
      out.put('\n');
    }
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return samples.size();
}

}  // namespace p2p
