#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nucleifuse/matrix.hpp"

namespace nucleifuse::metrics {

inline constexpr double kProbabilityEpsilon = 1e-7;

using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;

// Entry (i, j) counts samples of true class i predicted as j.
Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred);

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Classes absent from y_true, left out of the macro average.
  std::array<bool, kNumClasses> excluded{};

  bool warning() const;
};

// One-vs-rest precision/recall averaged over the classes present in y_true.
// A class with no predictions has precision 0. F1 is the harmonic mean of
// the macro precision and recall (0 when both are 0).
MacroScores macro_prf(std::span<const int> y_true, std::span<const int> y_pred);
MacroScores macro_prf(const Confusion& confusion);

// Mean of -log p(true class), probabilities clamped to [1e-7, 1].
double cross_entropy(std::span<const int> y_true, const Matrix& probs);

struct AucScores {
  double auc = 0.0;
  std::array<double, kNumClasses> per_class{};
  // Classes without both positives and negatives.
  std::array<bool, kNumClasses> excluded{};

  bool warning() const;
};

// Mann-Whitney AUC with midranks for ties.
// positive[i] != 0 marks a positive sample.
double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

// One-vs-rest AUC per class on column c, macro-averaged.
AucScores multiclass_auc(std::span<const int> y_true, const Matrix& probs);

// Row-wise argmax (lowest index on ties).
std::vector<int> argmax(const Matrix& probs);

struct FoldMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double loss = 0.0;
  Confusion confusion{};
};

struct EvaluationReport {
  std::string name;
  std::size_t samples = 0;
  std::size_t feature_width = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  double loss = 0.0;
  Confusion confusion{};
  std::vector<std::string> warnings;
  std::vector<FoldMetrics> per_fold;

  void validate() const;
};

FoldMetrics evaluate_fold(std::span<const int> y_true, const Matrix& probs);
EvaluationReport evaluate(std::string name, std::span<const int> y_true, const Matrix& probs);

std::string report_json(const EvaluationReport& report);
std::string reports_json(std::span<const EvaluationReport> reports);
// Header plus one row per report: method,precision,recall,f1,auc,loss,features,samples
std::string reports_csv(std::span<const EvaluationReport> reports);

}  // namespace nucleifuse::metrics
