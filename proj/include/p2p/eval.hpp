#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "p2p/mbti.hpp"
#include "p2p/rag.hpp"

namespace p2p {

struct EvalOptions {
  double alpha = 1.0;  // additive smoothing for retrieval probabilities
  // Positive class per dimension; defaults follow the I/E, N/S, T/F, J/P
  // reporting order.
  std::array<char, 4> positive_letters{'I', 'N', 'T', 'J'};
};

struct DimensionReport {
  Dimension dimension = Dimension::IE;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // absent on degenerate slices or RAG-off runs
  std::string auc_note;
  std::size_t support_pos = 0;
  std::size_t support_neg = 0;
};

struct RunReport {
  std::array<DimensionReport, 4> dimensions;
  double exact_accuracy = 0.0;  // all four letters correct
  std::size_t evaluated = 0;
  std::size_t fallback_count = 0;
  std::size_t skipped = 0;  // failed outcomes excluded from metrics
};

// Smoothed positive-class probability estimated from the demonstration
// labels: (positives + alpha) / (|demos| + 2*alpha). Throws EmptyDemosError.
double approx_probability(std::span<const Demonstration> demos, Dimension dim, double alpha,
                          char positive_letter);

// F1 = 2TP / (2TP + FP + FN); 0 when the denominator is 0. Pairs are
// (truth, predicted) binary labels; `positive` selects the positive value.
double f1_binary(std::span<const std::pair<int, int>> preds, int positive = 1);

// Probability that a random positive outscores a random negative, ties
// counting one half (midrank form). Throws DegenerateClassesError when only
// one class is present.
double auc(std::span<const std::pair<int, double>> scored);

// Per-dimension accuracy/F1 from predicted letters, AUC from
// approx_probability scores. Failed outcomes are skipped (counted); a missing
// ground-truth label raises MissingTruthError with the user id.
RunReport evaluate_run(std::span<const PredictionOutcome> outcomes,
                       const std::map<std::string, MbtiType>& truths,
                       const EvalOptions& options = {});

// Plain-text table, one row per dimension with Acc / F1 / AUC columns.
std::string render_report_table(const RunReport& report);

}  // namespace p2p
