#include "nucleifuse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nucleifuse/error.hpp"
#include "nucleifuse/rng.hpp"

namespace nucleifuse::ensemble {

EnsembleSpec EnsembleSpec::uniform(std::vector<std::string> members, Stage stage) {
  EnsembleSpec spec;
  spec.weights.assign(members.size(), members.empty() ? 0.0 : 1.0 / static_cast<double>(members.size()));
  spec.members = std::move(members);
  spec.stage = stage;
  return spec;
}

void EnsembleSpec::validate() const {
  if (members.size() < 2) throw InputError("an ensemble needs at least 2 members");
  if (weights.size() != members.size()) throw InputError("ensemble weights do not match the member count");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InputError("ensemble weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("ensemble weights must sum to 1");
}

double pool_scalar(std::span<const double> probabilities, std::span<const double> weights) {
  double log_p = 0.0;
  double log_q = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kPoolEpsilon, 1.0 - kPoolEpsilon);
    log_p += weights[i] * std::log(p);
    log_q += weights[i] * std::log1p(-p);
  }
  // P / (P + Q) = 1 / (1 + Q/P)
  return 1.0 / (1.0 + std::exp(log_q - log_p));
}

Matrix pool_probabilities(std::span<const ProbabilityMatrix> members, std::span<const double> weights) {
  if (members.empty()) throw InputError("pooling needs at least one member");
  if (weights.size() != members.size()) throw InputError("pooling: one weight per member required");
  for (std::size_t m = 0; m < weights.size(); ++m) {
    if (!(weights[m] > 0.0) || !std::isfinite(weights[m])) {
      throw InputError("pooling: weight of member " + std::to_string(m) + " must be positive");
    }
  }
  const std::size_t n = members.front().rows();
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& v = members[m].values;
    if (v.rows() != n) {
      throw InputError("pooling: member " + members[m].source_id + " has " + std::to_string(v.rows()) +
                       " rows, expected " + std::to_string(n));
    }
    if (v.cols() != kNumClasses) throw InputError("pooling: member " + members[m].source_id + " is not n x 4");
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (!std::isfinite(v(r, c))) {
          throw InputError("pooling: non-finite entry in member " + std::to_string(m) + " (" + members[m].source_id +
                           ") at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        }
      }
    }
  }

  Matrix out(n, kNumClasses);
  std::vector<double> column(members.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      for (std::size_t m = 0; m < members.size(); ++m) column[m] = members[m].values(r, c);
      out(r, c) = pool_scalar(column, weights);
    }
  }
  return out;
}

Matrix pool_probabilities(std::span<const ProbabilityMatrix> members) {
  const std::vector<double> weights(members.size(), 1.0 / static_cast<double>(std::max<std::size_t>(members.size(), 1)));
  return pool_probabilities(members, weights);
}

StageResult run_stage(std::span<const ProbabilityMatrix> members, std::span<const double> weights,
                      std::span<const int> labels, const dataset::SplitAssignment& folds,
                      const classify::TrainConfig& cfg, const std::string& name) {
  if (members.size() < 2) {
    throw InputError(name + ": a cascade stage needs at least 2 members, got " + std::to_string(members.size()));
  }
  std::vector<double> w(weights.begin(), weights.end());
  if (w.empty()) w.assign(members.size(), 1.0 / static_cast<double>(members.size()));
  StageResult stage;
  stage.pooled = pool_probabilities(members, w);
  const FeatureMatrix features(stage.pooled, name);
  stage.cv = crossval::cross_validate(features, labels, folds, cfg, name);
  return stage;
}

std::array<metrics::EvaluationReport, 3> CascadeResult::reports() const {
  return {hcf.cv.report, deep.cv.report, combined.cv.report};
}

CascadeResult cascade_run(std::span<const ProbabilityMatrix> hcf_probs, std::span<const ProbabilityMatrix> deep_probs,
                          std::span<const int> labels, const CascadeConfig& cfg) {
  if (hcf_probs.size() < 2) throw InputError("cascade: handcrafted stage needs at least 2 members");
  if (deep_probs.size() < 2) throw InputError("cascade: deep stage needs at least 2 members");
  const auto folds = dataset::make_folds(labels, cfg.folds, cfg.seed);

  auto stage_cfg = [&](std::uint64_t tag) {
    auto c = cfg.mlp;
    c.seed = derive_seed(cfg.seed, tag);
    return c;
  };

  CascadeResult out;
  out.hcf = run_stage(hcf_probs, cfg.hcf_weights, labels, folds, stage_cfg(11), kHcfEnsembleName);
  out.deep = run_stage(deep_probs, cfg.deep_weights, labels, folds, stage_cfg(12), kDeepEnsembleName);
  const std::array<ProbabilityMatrix, 2> stage_level = {ProbabilityMatrix{out.hcf.pooled, kHcfEnsembleName},
                                                        ProbabilityMatrix{out.deep.pooled, kDeepEnsembleName}};
  const std::array<double, 2> halves = {0.5, 0.5};
  out.combined = run_stage(stage_level, halves, labels, folds, stage_cfg(13), kCombinedEnsembleName);
  return out;
}

crossval::CvResult member_probabilities(const FeatureMatrix& features, std::span<const int> labels,
                                        const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                                        std::optional<reduction::FeatureKind> pca) {
  auto result = crossval::cross_validate(features, labels, folds, cfg, features.source_id(), pca);
  result.oof.source_id = features.source_id();
  return result;
}

// ---------------------------------------------------------------------------

FeatureMatrix concat_features(std::span<const FeatureMatrix> matrices) {
  if (matrices.empty()) throw InputError("concatenation needs at least one matrix");
  const std::size_t rows = matrices.front().rows();
  std::size_t width = 0;
  for (const auto& m : matrices) {
    if (m.rows() != rows) {
      throw InputError("concatenation: " + m.source_id() + " has " + std::to_string(m.rows()) + " rows, expected " +
                       std::to_string(rows));
    }
    width += m.cols();
  }
  FeatureMatrix out;
  out.values = Matrix(rows, width);
  std::size_t offset = 0;
  for (const auto& m : matrices) {
    for (std::size_t r = 0; r < rows; ++r) {
      const auto src = m.values.row(r);
      std::copy(src.begin(), src.end(), out.values.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += m.cols();
    out.blocks.insert(out.blocks.end(), m.blocks.begin(), m.blocks.end());
  }
  return out;
}

std::size_t concat_width(std::span<const std::pair<std::size_t, reduction::FeatureKind>> members, bool pca) {
  std::size_t width = 0;
  for (const auto& [dim, kind] : members) width += pca ? reduction::policy_components(kind, dim) : dim;
  return width;
}

metrics::EvaluationReport concat_run(std::span<const ConcatMember> members, bool pca, std::span<const int> labels,
                                     const dataset::SplitAssignment& folds, const classify::TrainConfig& cfg,
                                     const std::string& name) {
  if (members.empty()) throw InputError(name + ": no feature sets selected");
  std::vector<crossval::FeatureBlock> blocks;
  for (const auto& m : members) {
    blocks.push_back({m.features, pca ? std::optional(m.kind) : std::nullopt});
  }
  return crossval::cross_validate(blocks, labels, folds, cfg, name).report;
}

// ---------------------------------------------------------------------------

std::string ProbabilityHistogram::to_csv() const {
  std::ostringstream os;
  os << "class,bin_lo,bin_hi,count\n";
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t b = 0; b < bins; ++b) {
      os << c << ',' << static_cast<double>(b) / static_cast<double>(bins) << ','
         << static_cast<double>(b + 1) / static_cast<double>(bins) << ',' << counts(c, b) << '\n';
    }
  }
  return os.str();
}

ProbabilityHistogram probability_histograms(const Matrix& probs, std::span<const int> labels, std::size_t bins) {
  if (bins < 2) throw InputError("histograms need at least 2 bins");
  if (probs.rows() != labels.size() || probs.cols() != kNumClasses) {
    throw InputError("histograms: probability matrix does not match the labels");
  }
  validate_labels(labels);
  ProbabilityHistogram h;
  h.bins = bins;
  h.counts = Matrix(kNumClasses, bins);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const double p = std::clamp(probs(i, c), 0.0, 1.0);
    const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
    h.counts(c, b) += 1.0;
  }
  return h;
}

}  // namespace nucleifuse::ensemble
