#include "nucleifuse/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "binary_io.hpp"
#include "nucleifuse/dataset.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/metrics.hpp"
#include "nucleifuse/rng.hpp"

namespace nucleifuse::classify {

namespace {

constexpr char kMlpMagic[8] = {'M', 'L', 'P', 'M', 'D', 'L', '1', '\0'};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require_rows(const Matrix& x, std::span<const int> y, const char* what) {
  if (x.rows() != y.size()) {
    throw InputError(std::string(what) + ": " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(y.size()) + " labels");
  }
  validate_labels(y);
}

// Hidden activations and logits of one standardised row.
struct Forward {
  std::array<double, kHiddenUnits> hidden{};
  std::array<double, kNumClasses> logits{};
};

Forward forward(const MlpModel& m, std::span<const double> x) {
  Forward f;
  for (std::size_t h = 0; h < kHiddenUnits; ++h) {
    double z = m.b1[h];
    const auto w = m.w1.row(h);
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * x[j];
    f.hidden[h] = sigmoid(z);
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    double z = m.b2[c];
    for (std::size_t h = 0; h < kHiddenUnits; ++h) z += m.w2(c, h) * f.hidden[h];
    f.logits[c] = z;
  }
  return f;
}

std::array<double, kNumClasses> softmax(const std::array<double, kNumClasses>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  std::array<double, kNumClasses> p{};
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    p[c] = std::exp(z[c] - top);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double log_sum_exp(const std::array<double, kNumClasses>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - top);
  return top + std::log(sum);
}

// Loss on already-standardised rows.
double loss_on(const MlpModel& m, const Matrix& xs, std::span<const int> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const auto f = forward(m, xs.row(i));
    total += log_sum_exp(f.logits) - f.logits[static_cast<std::size_t>(y[i])];
  }
  return total / static_cast<double>(xs.rows());
}

MlpGradient zero_gradient(std::size_t d) {
  return {Matrix(kHiddenUnits, d), std::vector<double>(kHiddenUnits, 0.0), Matrix(kNumClasses, kHiddenUnits),
          std::vector<double>(kNumClasses, 0.0)};
}

// Accumulates the gradient of the mean loss over `rows` of standardised xs.
void accumulate_gradient(const MlpModel& m, const Matrix& xs, std::span<const int> y,
                         std::span<const std::size_t> rows, MlpGradient& g) {
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto i : rows) {
    const auto x = xs.row(i);
    const auto f = forward(m, x);
    auto delta2 = softmax(f.logits);
    delta2[static_cast<std::size_t>(y[i])] -= 1.0;
    for (auto& v : delta2) v *= inv;
    std::array<double, kHiddenUnits> delta1{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      g.b2[c] += delta2[c];
      for (std::size_t h = 0; h < kHiddenUnits; ++h) {
        g.w2(c, h) += delta2[c] * f.hidden[h];
        delta1[h] += m.w2(c, h) * delta2[c];
      }
    }
    for (std::size_t h = 0; h < kHiddenUnits; ++h) {
      const double dh = delta1[h] * f.hidden[h] * (1.0 - f.hidden[h]);
      g.b1[h] += dh;
      auto gw = g.w1.row(h);
      for (std::size_t j = 0; j < x.size(); ++j) gw[j] += dh * x[j];
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows();
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 1.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) s.mean[j] += row[j];
  }
  for (auto& v : s.mean) v /= static_cast<double>(n);
  std::vector<double> var(x.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double t = row[j] - s.mean[j];
      var[j] += t * t;
    }
  }
  for (std::size_t j = 0; j < var.size(); ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw InputError("standardizer expects " + std::to_string(mean.size()) + " columns, got " +
                     std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = (src[j] - mean[j]) / scale[j];
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw InputError("batch size must be positive");
}

MlpModel mlp_init(std::size_t input_dim, std::uint64_t seed) {
  if (input_dim == 0) throw InputError("MLP input width must be positive");
  Rng rng(seed);
  MlpModel m;
  m.w1 = Matrix(kHiddenUnits, input_dim);
  m.b1.assign(kHiddenUnits, 0.0);
  m.w2 = Matrix(kNumClasses, kHiddenUnits);
  m.b2.assign(kNumClasses, 0.0);
  const double limit1 = std::sqrt(6.0 / static_cast<double>(input_dim + kHiddenUnits));
  for (auto& v : m.w1.data()) v = rng.uniform(-limit1, limit1);
  const double limit2 = std::sqrt(6.0 / static_cast<double>(kHiddenUnits + kNumClasses));
  for (auto& v : m.w2.data()) v = rng.uniform(-limit2, limit2);
  m.scaler = Standardizer::identity(input_dim);
  return m;
}

double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> y) {
  require_rows(x, y, "MLP loss");
  if (x.rows() == 0) throw InputError("MLP loss of an empty set");
  return loss_on(model, model.scaler.apply(x), y);
}

MlpGradient mlp_gradient(const MlpModel& model, const Matrix& x, std::span<const int> y) {
  require_rows(x, y, "MLP gradient");
  if (x.cols() != model.input_dim()) throw InputError("MLP gradient: width mismatch");
  if (x.rows() == 0) throw InputError("MLP gradient of an empty batch");
  const Matrix xs = model.scaler.apply(x);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  auto g = zero_gradient(x.cols());
  accumulate_gradient(model, xs, y, rows, g);
  return g;
}

MlpModel mlp_train(const Matrix& x_train, std::span<const int> y_train, const Matrix& x_val,
                   std::span<const int> y_val, const TrainConfig& cfg) {
  cfg.validate();
  require_rows(x_train, y_train, "MLP training set");
  require_rows(x_val, y_val, "MLP validation set");
  if (x_train.rows() == 0) throw InputError("MLP training set is empty");
  if (x_val.rows() == 0) throw InputError("MLP validation set is empty");
  if (x_val.cols() != x_train.cols()) throw InputError("MLP: training and validation widths differ");
  require_finite(x_train, "MLP training set");
  require_finite(x_val, "MLP validation set");

  MlpModel model = mlp_init(x_train.cols(), derive_seed(cfg.seed, 1));
  model.scaler = cfg.standardize ? Standardizer::fit(x_train) : Standardizer::identity(x_train.cols());
  const Matrix xs = model.scaler.apply(x_train);
  const Matrix vs = model.scaler.apply(x_val);

  model.trace.push_back({loss_on(model, xs, y_train), loss_on(model, vs, y_val)});
  MlpModel best = model;
  double best_val = model.trace.back().val_loss;
  std::size_t since_best = 0;

  auto velocity = zero_gradient(x_train.cols());
  Rng rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(x_train.rows());
  std::iota(order.begin(), order.end(), 0);

  auto step = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = cfg.momentum * v[i] - cfg.learning_rate * g[i];
      w[i] += v[i];
    }
  };

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      auto g = zero_gradient(x_train.cols());
      accumulate_gradient(model, xs, y_train, std::span<const std::size_t>(order).subspan(start, end - start), g);
      step(model.w1.data(), velocity.w1.data(), g.w1.data());
      step(model.b1, velocity.b1, g.b1);
      step(model.w2.data(), velocity.w2.data(), g.w2.data());
      step(model.b2, velocity.b2, g.b2);
    }
    const EpochLoss el{loss_on(model, xs, y_train), loss_on(model, vs, y_val)};
    if (std::isnan(el.train_loss) || std::isnan(el.val_loss)) {
      throw NumericError("MLP training produced a NaN loss at epoch " + std::to_string(epoch));
    }
    model.trace.push_back(el);
    if (el.val_loss < best_val) {
      best_val = el.val_loss;
      best = model;
      best.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience && cfg.early_stop_patience > 0) {
      break;
    }
  }
  best.trace = model.trace;
  return best;
}

MlpModel mlp_train_holdout(const Matrix& x, std::span<const int> y, const TrainConfig& cfg) {
  const auto split = dataset::make_splits(y, {0.85, 0.15, 0.0}, derive_seed(cfg.seed, 3));
  auto train_idx = split.members(static_cast<std::uint32_t>(dataset::Split::Train));
  auto val_idx = split.members(static_cast<std::uint32_t>(dataset::Split::Validation));
  if (val_idx.empty()) {
    // Too few rows for a holdout; validate on the training rows.
    val_idx = train_idx;
  }
  return mlp_train(x.select_rows(train_idx), select(y, train_idx), x.select_rows(val_idx), select(y, val_idx), cfg);
}

ProbabilityMatrix mlp_predict_proba(const MlpModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw InputError("MLP expects " + std::to_string(model.input_dim()) + " features, got " +
                     std::to_string(x.cols()));
  }
  const Matrix xs = model.scaler.apply(x);
  ProbabilityMatrix out{Matrix(x.rows(), kNumClasses), "mlp"};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto p = softmax(forward(model, xs.row(i)).logits);
    std::copy(p.begin(), p.end(), out.values.row(i).begin());
  }
  return out;
}

void write_mlp(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kMlpMagic, sizeof(kMlpMagic));
  detail::write_le<std::uint64_t>(out, model.input_dim());
  detail::write_le<std::uint64_t>(out, kHiddenUnits);
  detail::write_le<std::uint64_t>(out, kNumClasses);
  for (double v : model.w1.data()) detail::write_le(out, v);
  for (double v : model.b1) detail::write_le(out, v);
  for (double v : model.w2.data()) detail::write_le(out, v);
  for (double v : model.b2) detail::write_le(out, v);
  for (double v : model.scaler.mean) detail::write_le(out, v);
  for (double v : model.scaler.scale) detail::write_le(out, v);
}

MlpModel read_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("MLP model not found: " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != 8 || std::memcmp(magic, kMlpMagic, 8) != 0) throw FormatError("bad MLP model magic", 0);
  const auto d = detail::read_le<std::uint64_t>(in, "MLP model");
  const auto hidden = detail::read_le<std::uint64_t>(in, "MLP model");
  const auto classes = detail::read_le<std::uint64_t>(in, "MLP model");
  if (hidden != kHiddenUnits || classes != kNumClasses) throw FormatError("unsupported MLP layer sizes", 16);
  MlpModel m;
  m.w1 = Matrix(kHiddenUnits, d);
  m.b1.resize(kHiddenUnits);
  m.w2 = Matrix(kNumClasses, kHiddenUnits);
  m.b2.resize(kNumClasses);
  m.scaler.mean.resize(d);
  m.scaler.scale.resize(d);
  for (auto* vec : {&m.w1.data(), &m.b1, &m.w2.data(), &m.b2, &m.scaler.mean, &m.scaler.scale}) {
    for (auto& v : *vec) v = detail::read_le<double>(in, "MLP model");
  }
  return m;
}

// ---------------------------------------------------------------------------

ProbabilityMatrix knn_predict(const Matrix& x_train, std::span<const int> y_train, const Matrix& x, std::size_t k) {
  require_rows(x_train, y_train, "KNN");
  if (k == 0 || k > x_train.rows()) {
    throw InputError("KNN: k = " + std::to_string(k) + " with " + std::to_string(x_train.rows()) + " training rows");
  }
  if (x.cols() != x_train.cols()) throw InputError("KNN: width mismatch");
  ProbabilityMatrix out{Matrix(x.rows(), kNumClasses), "knn"};
  std::vector<std::pair<double, std::size_t>> dist(x_train.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto q = x.row(i);
    for (std::size_t t = 0; t < x_train.rows(); ++t) {
      const auto r = x_train.row(t);
      double d = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        const double diff = q[j] - r[j];
        d += diff * diff;
      }
      dist[t] = {d, t};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t n = 0; n < k; ++n) {
      out.values(i, static_cast<std::size_t>(y_train[dist[n].second])) += 1.0 / static_cast<double>(k);
    }
  }
  return out;
}

namespace {

double gini(const std::array<std::size_t, kNumClasses>& counts, std::size_t total) {
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum += p * p;
  }
  return 1.0 - sum;
}

int grow(DecisionTree& tree, const Matrix& x, std::span<const int> y, std::vector<std::size_t>& rows,
         std::size_t depth, const TreeConfig& cfg) {
  std::array<std::size_t, kNumClasses> counts{};
  for (auto i : rows) ++counts[static_cast<std::size_t>(y[i])];
  TreeNode node;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    node.probs[c] = static_cast<double>(counts[c]) / static_cast<double>(rows.size());
  }
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(node);

  const double parent = gini(counts, rows.size());
  if (depth >= cfg.max_depth || rows.size() < cfg.min_samples_split || parent == 0.0) return index;

  double best_score = parent - 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<std::size_t> sorted = rows;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return x(a, f) < x(b, f) || (x(a, f) == x(b, f) && a < b);
    });
    std::array<std::size_t, kNumClasses> left{};
    for (std::size_t s = 0; s + 1 < sorted.size(); ++s) {
      ++left[static_cast<std::size_t>(y[sorted[s]])];
      const double v = x(sorted[s], f);
      const double next = x(sorted[s + 1], f);
      if (v == next) continue;
      std::array<std::size_t, kNumClasses> right{};
      for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = counts[c] - left[c];
      const std::size_t nl = s + 1;
      const std::size_t nr = sorted.size() - nl;
      const double score = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                           static_cast<double>(sorted.size());
      if (score < best_score) {
        best_score = score;
        best_feature = static_cast<int>(f);
        best_threshold = v + (next - v) / 2.0;
      }
    }
  }
  if (best_feature < 0) return index;

  std::vector<std::size_t> left_rows;
  std::vector<std::size_t> right_rows;
  for (auto i : rows) {
    (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows : right_rows).push_back(i);
  }
  rows.clear();
  rows.shrink_to_fit();
  const int l = grow(tree, x, y, left_rows, depth + 1, cfg);
  const int r = grow(tree, x, y, right_rows, depth + 1, cfg);
  tree.nodes[static_cast<std::size_t>(index)].feature = best_feature;
  tree.nodes[static_cast<std::size_t>(index)].threshold = best_threshold;
  tree.nodes[static_cast<std::size_t>(index)].left = l;
  tree.nodes[static_cast<std::size_t>(index)].right = r;
  return index;
}

}  // namespace

DecisionTree tree_train(const Matrix& x, std::span<const int> y, const TreeConfig& cfg) {
  require_rows(x, y, "decision tree");
  if (x.rows() == 0) throw InputError("decision tree: empty training set");
  if (cfg.max_depth > 64) throw InputError("decision tree depth is bounded by 64");
  DecisionTree tree;
  tree.input_dim = x.cols();
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  grow(tree, x, y, rows, 0, cfg);
  return tree;
}

ProbabilityMatrix tree_predict(const DecisionTree& tree, const Matrix& x) {
  if (x.cols() != tree.input_dim) throw InputError("decision tree: width mismatch");
  ProbabilityMatrix out{Matrix(x.rows(), kNumClasses), "tree"};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    int n = 0;
    while (tree.nodes[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = tree.nodes[static_cast<std::size_t>(n)];
      n = x(i, static_cast<std::size_t>(node.feature)) <= node.threshold ? node.left : node.right;
    }
    const auto& probs = tree.nodes[static_cast<std::size_t>(n)].probs;
    std::copy(probs.begin(), probs.end(), out.values.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Tree: return "tree";
  }
  return "unknown";
}

std::string SelectionTable::to_csv() const {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << "descriptor";
  for (const auto& c : classifiers) os << ',' << c;
  os << '\n';
  for (std::size_t r = 0; r < descriptors.size(); ++r) {
    os << descriptors[r];
    for (std::size_t c = 0; c < classifiers.size(); ++c) os << ',' << loss(r, c);
    os << '\n';
  }
  return os.str();
}

namespace {

std::string cell_context(const std::string& descriptor, const std::string& classifier, std::uint32_t fold) {
  return "classifier selection cell (" + descriptor + ", " + classifier + "), fold " + std::to_string(fold) + ": ";
}

}  // namespace

SelectionTable classifier_selection(std::span<const FeatureMatrix> descriptors, std::span<const int> labels,
                                    std::span<const ClassifierKind> classifiers, const SelectionOptions& options) {
  if (descriptors.size() < 2) throw InputError("classifier selection needs at least 2 descriptors");
  if (classifiers.size() < 2) throw InputError("classifier selection needs at least 2 classifiers");
  validate_labels(labels);
  const auto folds = dataset::make_folds(labels, options.folds, options.seed);

  SelectionTable table;
  table.loss = Matrix(descriptors.size(), classifiers.size());
  for (const auto& c : classifiers) table.classifiers.emplace_back(classifier_name(c));
  for (std::size_t d = 0; d < descriptors.size(); ++d) {
    const auto& fm = descriptors[d];
    table.descriptors.push_back(fm.source_id());
    if (fm.rows() != labels.size()) {
      throw InputError("descriptor " + fm.source_id() + " has " + std::to_string(fm.rows()) + " rows for " +
                       std::to_string(labels.size()) + " labels");
    }
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
      double total = 0.0;
      for (std::uint32_t f = 0; f < folds.buckets; ++f) {
        const auto test_idx = folds.members(f);
        const auto train_idx = folds.non_members(f);
        const Matrix x_train = fm.values.select_rows(train_idx);
        const Matrix x_test = fm.values.select_rows(test_idx);
        const auto y_train = select(labels, train_idx);
        const auto y_test = select(labels, test_idx);
        try {
          Matrix probs;
          switch (classifiers[c]) {
            case ClassifierKind::Mlp: {
              auto cfg = options.mlp;
              cfg.seed = derive_seed(options.seed, d * 131 + f);
              probs = mlp_predict_proba(mlp_train_holdout(x_train, y_train, cfg), x_test).values;
              break;
            }
            case ClassifierKind::Knn: {
              const auto scaler = Standardizer::fit(x_train);
              probs = knn_predict(scaler.apply(x_train), y_train, scaler.apply(x_test),
                                  std::min(options.knn_k, x_train.rows()))
                          .values;
              break;
            }
            case ClassifierKind::Tree:
              probs = tree_predict(tree_train(x_train, y_train, options.tree), x_test).values;
              break;
          }
          total += metrics::cross_entropy(y_test, probs);
        } catch (const NumericError& e) {
          throw NumericError(cell_context(fm.source_id(), table.classifiers[c], f) + e.what());
        } catch (const InputError& e) {
          throw InputError(cell_context(fm.source_id(), table.classifiers[c], f) + e.what());
        }
      }
      table.loss(d, c) = total / static_cast<double>(folds.buckets);
    }
  }
  return table;
}

}  // namespace nucleifuse::classify
