#pragma once

#include <optional>
#include <span>
#include <string>

#include "nucleifuse/classify.hpp"
#include "nucleifuse/dataset.hpp"
#include "nucleifuse/matrix.hpp"
#include "nucleifuse/metrics.hpp"
#include "nucleifuse/reduction.hpp"

namespace nucleifuse::crossval {

// One input block of a cross-validated MLP run. When `pca` is set the
// block is reduced with that policy, fitted on each fold's training rows.
struct FeatureBlock {
  const FeatureMatrix* features = nullptr;
  std::optional<reduction::FeatureKind> pca;
};

struct CvResult {
  ProbabilityMatrix oof;  // out-of-fold probabilities, original row order
  metrics::EvaluationReport report;
};

// For every fold: reduce (optional) and concatenate the blocks, train the
// MLP on the remaining folds (with an inner 15% validation split), predict
// the held-out fold. The report is computed on the pooled out-of-fold
// predictions, with per-fold metrics attached.
CvResult cross_validate(std::span<const FeatureBlock> blocks, std::span<const int> labels,
                        const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                        const std::string& name);

CvResult cross_validate(const FeatureMatrix& features, std::span<const int> labels,
                        const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                        const std::string& name, std::optional<reduction::FeatureKind> pca = std::nullopt);

}  // namespace nucleifuse::crossval
