#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nucleifuse/matrix.hpp"

namespace nucleifuse::classify {

// Per-column z-scoring with training statistics. Zero-variance columns are
// only centred.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  static Standardizer identity(std::size_t dim);
  Matrix apply(const Matrix& x) const;
};

struct TrainConfig {
  double learning_rate = 0.001;
  double momentum = 0.95;
  std::size_t max_epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 10;
  bool standardize = true;

  void validate() const;
};

struct EpochLoss {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

inline constexpr std::size_t kHiddenUnits = 10;

// d -> 10 sigmoid -> 4 softmax.
struct MlpModel {
  Matrix w1;               // 10 x d
  std::vector<double> b1;  // 10
  Matrix w2;               // 4 x 10
  std::vector<double> b2;  // 4
  Standardizer scaler;
  std::vector<EpochLoss> trace;  // entry 0 is the untrained network
  std::size_t best_epoch = 0;

  std::size_t input_dim() const noexcept { return w1.cols(); }
};

// Glorot-uniform weights, zero biases, identity scaler.
MlpModel mlp_init(std::size_t input_dim, std::uint64_t seed);

struct MlpGradient {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
};

// Mean softmax cross-entropy (exact log-sum-exp form) on raw inputs; the
// model's scaler is applied first.
double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> y);
MlpGradient mlp_gradient(const MlpModel& model, const Matrix& x, std::span<const int> y);

// Mini-batch SGD with momentum; returns the snapshot with the lowest
// validation loss. Throws NumericError on a NaN loss.
MlpModel mlp_train(const Matrix& x_train, std::span<const int> y_train, const Matrix& x_val,
                   std::span<const int> y_val, const TrainConfig& cfg);

// Carves a stratified 15% validation split out of the given data and
// trains on the rest.
MlpModel mlp_train_holdout(const Matrix& x, std::span<const int> y, const TrainConfig& cfg);

ProbabilityMatrix mlp_predict_proba(const MlpModel& model, const Matrix& x);

// "MLPMDL1\0", u64 d, u64 hidden, u64 classes, W1, b1, W2, b2, scaler mean,
// scaler scale (64-bit little-endian reals).
void write_mlp(const MlpModel& model, const std::filesystem::path& path);
MlpModel read_mlp(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

// Neighbour-class fractions among the k nearest training rows (Euclidean,
// ties by training index).
ProbabilityMatrix knn_predict(const Matrix& x_train, std::span<const int> y_train, const Matrix& x,
                              std::size_t k);

struct TreeConfig {
  std::size_t max_depth = 8;
  std::size_t min_samples_split = 2;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, kNumClasses> probs{};
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t input_dim = 0;
};

// CART with Gini impurity; goes left when x[feature] <= threshold.
DecisionTree tree_train(const Matrix& x, std::span<const int> y, const TreeConfig& cfg = {});
ProbabilityMatrix tree_predict(const DecisionTree& tree, const Matrix& x);

// ---------------------------------------------------------------------------

enum class ClassifierKind { Mlp, Knn, Tree };

std::string_view classifier_name(ClassifierKind kind);

struct SelectionOptions {
  std::uint32_t folds = 2;
  std::uint64_t seed = 0;
  std::size_t knn_k = 5;
  TreeConfig tree;
  TrainConfig mlp;
};

// Mean cross-validated cross-entropy per (descriptor, classifier).
struct SelectionTable {
  std::vector<std::string> descriptors;
  std::vector<std::string> classifiers;
  Matrix loss;  // descriptors x classifiers

  std::string to_csv() const;
};

SelectionTable classifier_selection(std::span<const FeatureMatrix> descriptors, std::span<const int> labels,
                                    std::span<const ClassifierKind> classifiers, const SelectionOptions& options);

}  // namespace nucleifuse::classify
