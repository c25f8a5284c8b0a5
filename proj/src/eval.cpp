#include "p2p/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "p2p/errors.hpp"

namespace p2p {

double approx_probability(std::span<const Demonstration> demos, Dimension dim, double alpha,
                          char positive_letter) {
  if (demos.empty()) throw EmptyDemosError("cannot approximate a probability from zero demos");
  std::size_t positives = 0;
  for (const auto& demo : demos) {
    if (demo.label.letter(dim) == positive_letter) ++positives;
  }
  return (static_cast<double>(positives) + alpha) /
         (static_cast<double>(demos.size()) + 2.0 * alpha);
}

double f1_binary(std::span<const std::pair<int, int>> preds, int positive) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [truth, predicted] : preds) {
    const bool t = truth == positive;
    const bool p = predicted == positive;
    if (t && p) ++tp;
    if (!t && p) ++fp;
    if (t && !p) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(tp) / denom;
}

double auc(std::span<const std::pair<int, double>> scored) {
  // Midrank (Mann-Whitney) form: rank everything, sum positive ranks.
  std::vector<std::pair<double, int>> by_score;
  by_score.reserve(scored.size());
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& [truth, score] : scored) {
    by_score.emplace_back(score, truth);
    (truth != 0 ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateClassesError("AUC needs at least one positive and one negative");
  }
  std::sort(by_score.begin(), by_score.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < by_score.size()) {
    std::size_t j = i;
    while (j < by_score.size() && by_score[j].first == by_score[i].first) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (by_score[t].second != 0) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

RunReport evaluate_run(std::span<const PredictionOutcome> outcomes,
                       const std::map<std::string, MbtiType>& truths,
                       const EvalOptions& options) {
  RunReport report;
  std::vector<const PredictionOutcome*> usable;
  for (const auto& outcome : outcomes) {
    if (!outcome.ok || !outcome.predicted) {
      ++report.skipped;
      continue;
    }
    if (!truths.count(outcome.user_id)) {
      throw MissingTruthError("no ground-truth label for user " + outcome.user_id);
    }
    usable.push_back(&outcome);
  }
  if (usable.empty()) throw EmptyRunError("no usable predictions to evaluate");
  report.evaluated = usable.size();

  std::size_t exact = 0;
  for (const auto* outcome : usable) {
    if (outcome->fallback_used) ++report.fallback_count;
    if (*outcome->predicted == truths.at(outcome->user_id)) ++exact;
  }
  report.exact_accuracy = static_cast<double>(exact) / static_cast<double>(usable.size());

  for (std::size_t d = 0; d < kNumDimensions; ++d) {
    const auto dim = static_cast<Dimension>(d);
    const char positive = options.positive_letters[d];
    DimensionReport& dr = report.dimensions[d];
    dr.dimension = dim;

    std::vector<std::pair<int, int>> pairs;
    std::vector<std::pair<int, double>> scored;
    std::size_t correct = 0;
    for (const auto* outcome : usable) {
      const MbtiType truth = truths.at(outcome->user_id);
      const int t = truth.letter(dim) == positive ? 1 : 0;
      const int p = outcome->predicted->letter(dim) == positive ? 1 : 0;
      pairs.emplace_back(t, p);
      if (t == p) ++correct;
      (t != 0 ? dr.support_pos : dr.support_neg) += 1;
      if (!outcome->demos.empty()) {
        scored.emplace_back(t, approx_probability(outcome->demos, dim, options.alpha, positive));
      }
    }
    dr.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
    dr.f1 = f1_binary(pairs, 1);
    if (scored.empty()) {
      dr.auc_note = "unavailable: no retrieval scores (RAG off)";
    } else {
      try {
        dr.auc = auc(scored);
      } catch (const DegenerateClassesError&) {
        dr.auc_note = "undefined: single-class slice";
      }
    }
  }
  return report;
}

std::string render_report_table(const RunReport& report) {
  std::ostringstream out;
  char buf[64];
  out << "Dim   Acc     F1      AUC     Pos/Neg\n";
  for (const auto& dr : report.dimensions) {
    const char* name = kDimensionNames[static_cast<std::size_t>(dr.dimension)];
    std::snprintf(buf, sizeof(buf), "%-5s %.4f  %.4f  ", name, dr.accuracy, dr.f1);
    out << buf;
    if (dr.auc) {
      std::snprintf(buf, sizeof(buf), "%.4f", *dr.auc);
      out << buf;
    } else {
      out << "n/a   ";
    }
    out << "  " << dr.support_pos << "/" << dr.support_neg << "\n";
  }
  std::snprintf(buf, sizeof(buf), "exact-type accuracy %.4f over %zu users",
                report.exact_accuracy, report.evaluated);
  out << buf;
  if (report.fallback_count > 0) out << " (" << report.fallback_count << " fallback)";
  if (report.skipped > 0) out << " (" << report.skipped << " skipped)";
  out << "\n";
  return out.str();
}

}  // namespace p2p
