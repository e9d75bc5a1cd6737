#include "nucleifuse/crossval.hpp"

#include <algorithm>

#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"

namespace nucleifuse::crossval {

namespace {

Matrix hconcat(const std::vector<Matrix>& parts) {
  std::size_t width = 0;
  for (const auto& p : parts) width += p.cols();
  const std::size_t rows = parts.empty() ? 0 : parts.front().rows();
  Matrix out(rows, width);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      const auto src = p.row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += p.cols();
  }
  return out;
}

}  // namespace

CvResult cross_validate(std::span<const FeatureBlock> blocks, std::span<const int> labels,
                        const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                        const std::string& name) {
  if (blocks.empty()) throw InputError(name + ": no feature blocks");
  validate_labels(labels);
  if (folds.size() != labels.size()) throw InputError(name + ": fold assignment does not match the sample count");
  for (const auto& b : blocks) {
    if (b.features->rows() != labels.size()) {
      throw InputError(name + ": feature matrix " + b.features->source_id() + " has " +
                       std::to_string(b.features->rows()) + " rows for " + std::to_string(labels.size()) + " labels");
    }
  }

  CvResult result;
  result.oof = ProbabilityMatrix{Matrix(labels.size(), kNumClasses), name};
  std::size_t width = 0;
  std::vector<metrics::FoldMetrics> per_fold;

  for (std::uint32_t f = 0; f < folds.buckets; ++f) {
    const auto test_idx = folds.members(f);
    const auto train_idx = folds.non_members(f);
    if (test_idx.empty() || train_idx.empty()) throw InputError(name + ": empty fold " + std::to_string(f));

    std::vector<Matrix> train_parts;
    std::vector<Matrix> test_parts;
    for (const auto& b : blocks) {
      Matrix tr = b.features->values.select_rows(train_idx);
      Matrix te = b.features->values.select_rows(test_idx);
      if (b.pca) {
        const std::size_t k =
            std::min(reduction::policy_components(*b.pca, tr.cols()), tr.rows() > 1 ? tr.rows() - 1 : 1);
        const auto model = reduction::pca_fit(tr, k);
        tr = reduction::pca_transform(model, tr);
        te = reduction::pca_transform(model, te);
      }
      train_parts.push_back(std::move(tr));
      test_parts.push_back(std::move(te));
    }
    const Matrix x_train = hconcat(train_parts);
    const Matrix x_test = hconcat(test_parts);
    width = x_train.cols();

    auto fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, 1000 + f);
    const auto y_train = select(labels, train_idx);
    const auto model = classify::mlp_train_holdout(x_train, y_train, fold_cfg);
    const auto probs = classify::mlp_predict_proba(model, x_test);
    for (std::size_t i = 0; i < test_idx.size(); ++i) {
      const auto src = probs.values.row(i);
      std::copy(src.begin(), src.end(), result.oof.values.row(test_idx[i]).begin());
    }
    per_fold.push_back(metrics::evaluate_fold(select(labels, test_idx), probs.values));
  }

  result.report = metrics::evaluate(name, labels, result.oof.values);
  result.report.feature_width = width;
  result.report.per_fold = std::move(per_fold);
  return result;
}

CvResult cross_validate(const FeatureMatrix& features, std::span<const int> labels,
                        const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                        const std::string& name, std::optional<reduction::FeatureKind> pca) {
  const FeatureBlock block{&features, pca};
  return cross_validate(std::span<const FeatureBlock>(&block, 1), labels, folds, cfg, name);
}

}  // namespace nucleifuse::crossval
