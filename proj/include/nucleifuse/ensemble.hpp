#pragma once

#include <array>
#include <optional>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nucleifuse/classify.hpp"
#include "nucleifuse/crossval.hpp"
#include "nucleifuse/matrix.hpp"
#include "nucleifuse/metrics.hpp"
#include "nucleifuse/reduction.hpp"

namespace nucleifuse::ensemble {

inline constexpr double kPoolEpsilon = 1e-7;

enum class Stage { HCF, Deep, Combined };

struct EnsembleSpec {
  std::vector<std::string> members;
  std::vector<double> weights;
  Stage stage = Stage::HCF;

  // Equal weights 1/N.
  static EnsembleSpec uniform(std::vector<std::string> members, Stage stage);
  // At least two members, positive weights summing to 1.
  void validate() const;
};

// Logarithmic opinion pool, applied per class independently:
//   P = prod p_i^w_i / (prod p_i^w_i + prod (1 - p_i)^w_i)
// evaluated in log space on entries clamped to [1e-7, 1 - 1e-7]. Rows are
// not renormalised across classes.
Matrix pool_probabilities(std::span<const ProbabilityMatrix> members, std::span<const double> weights);
Matrix pool_probabilities(std::span<const ProbabilityMatrix> members);

// Single-entry form of the pool, used by the algebra checks.
double pool_scalar(std::span<const double> probabilities, std::span<const double> weights);

struct CascadeConfig {
  std::uint32_t folds = 5;
  std::uint64_t seed = 0;
  classify::TrainConfig mlp;
  std::vector<double> hcf_weights;   // empty = equal
  std::vector<double> deep_weights;  // empty = equal
};

struct StageResult {
  Matrix pooled;          // n x 4 pooled scores fed to the stage MLP
  crossval::CvResult cv;  // stage MLP out-of-fold output and report
};

// Pools members and reclassifies the pooled scores with a
// cross-validated MLP.
StageResult run_stage(std::span<const ProbabilityMatrix> members, std::span<const double> weights,
                      std::span<const int> labels, const dataset::SplitAssignment& folds,
                      const classify::TrainConfig& cfg, const std::string& name);

struct CascadeResult {
  StageResult hcf;       // "HF-Ensemble"
  StageResult deep;      // "Deep Ensemble"
  StageResult combined;  // "HF + Deep Ensemble"

  std::array<metrics::EvaluationReport, 3> reports() const;
};

inline constexpr const char* kHcfEnsembleName = "HF-Ensemble";
inline constexpr const char* kDeepEnsembleName = "Deep Ensemble";
inline constexpr const char* kCombinedEnsembleName = "HF + Deep Ensemble";

// Stage 3 pools the two stage-level pooled matrices with weights (1/2, 1/2).
// One fold assignment (from cfg.folds, cfg.seed) is shared by every stage.
CascadeResult cascade_run(std::span<const ProbabilityMatrix> hcf_probs, std::span<const ProbabilityMatrix> deep_probs,
                          std::span<const int> labels, const CascadeConfig& cfg);

// Out-of-fold member probabilities for one feature set (optionally
// PCA-reduced per fold), as consumed by the cascade.
crossval::CvResult member_probabilities(const FeatureMatrix& features, std::span<const int> labels,
                                        const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                                        std::optional<reduction::FeatureKind> pca);

// ---------------------------------------------------------------------------

FeatureMatrix concat_features(std::span<const FeatureMatrix> matrices);

struct ConcatMember {
  const FeatureMatrix* features = nullptr;
  reduction::FeatureKind kind = reduction::FeatureKind::Handcrafted;
};

// Width after the per-member PCA policy (pca) or raw concatenation.
std::size_t concat_width(std::span<const std::pair<std::size_t, reduction::FeatureKind>> members, bool pca);

// Concatenate (after per-member PCA when enabled) and evaluate a
// cross-validated MLP on the result.
metrics::EvaluationReport concat_run(std::span<const ConcatMember> members, bool pca, std::span<const int> labels,
                                     const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                                     const std::string& name);

// ---------------------------------------------------------------------------

// counts(c, b): samples of true class c whose predicted probability for c
// falls in bin b of [0, 1] (equal-width bins, 1.0 in the last bin).
struct ProbabilityHistogram {
  std::size_t bins = 0;
  Matrix counts;  // 4 x bins

  std::string to_csv() const;
};

ProbabilityHistogram probability_histograms(const Matrix& probs, std::span<const int> labels, std::size_t bins);

}  // namespace nucleifuse::ensemble
