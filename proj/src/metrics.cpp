#include "nucleifuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nucleifuse/error.hpp"

namespace nucleifuse::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

nlohmann::ordered_json confusion_json(const Confusion& c) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& row : c) j.push_back(row);
  return j;
}

nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["samples"] = r.samples;
  j["feature_width"] = r.feature_width;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["auc"] = r.auc;
  j["loss"] = r.loss;
  j["confusion"] = confusion_json(r.confusion);
  j["warnings"] = r.warnings;
  auto folds = nlohmann::ordered_json::array();
  for (const auto& f : r.per_fold) {
    nlohmann::ordered_json fj;
    fj["precision"] = f.precision;
    fj["recall"] = f.recall;
    fj["f1"] = f.f1;
    fj["auc"] = f.auc;
    fj["loss"] = f.loss;
    fj["confusion"] = confusion_json(f.confusion);
    folds.push_back(fj);
  }
  j["per_fold"] = folds;
  return j;
}

}  // namespace

Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  require_same_length(y_true.size(), y_pred.size(), "confusion");
  validate_labels(y_true);
  validate_labels(y_pred);
  Confusion c{};
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ++c[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return c;
}

bool MacroScores::warning() const {
  return std::any_of(excluded.begin(), excluded.end(), [](bool b) { return b; });
}

bool AucScores::warning() const {
  return std::any_of(excluded.begin(), excluded.end(), [](bool b) { return b; });
}

MacroScores macro_prf(const Confusion& conf) {
  MacroScores s;
  double p_sum = 0.0;
  double r_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = conf[c][c];
    std::size_t fn = 0;
    std::size_t fp = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      if (j == c) continue;
      fn += conf[c][j];
      fp += conf[j][c];
    }
    if (tp + fn == 0) {
      s.excluded[c] = true;
      continue;
    }
    ++present;
    r_sum += static_cast<double>(tp) / static_cast<double>(tp + fn);
    p_sum += tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (present == 0) throw InputError("macro P/R/F1 of an empty label set");
  s.precision = p_sum / static_cast<double>(present);
  s.recall = r_sum / static_cast<double>(present);
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

MacroScores macro_prf(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw InputError("macro P/R/F1 of an empty label set");
  return macro_prf(confusion(y_true, y_pred));
}

double cross_entropy(std::span<const int> y_true, const Matrix& probs) {
  require_same_length(y_true.size(), probs.rows(), "cross-entropy");
  if (probs.cols() != kNumClasses) throw InputError("cross-entropy expects 4 probability columns");
  validate_labels(y_true);
  if (y_true.empty()) throw InputError("cross-entropy of an empty set");
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (std::isnan(probs(i, c))) {
        throw InputError("cross-entropy: NaN probability at (" + std::to_string(i) + ", " + std::to_string(c) + ")");
      }
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double p = probs(i, static_cast<std::size_t>(y_true[i]));
    total -= std::log(std::clamp(p, kProbabilityEpsilon, 1.0));
  }
  return total / static_cast<double>(y_true.size());
}

double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  require_same_length(scores.size(), positive.size(), "AUC");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
    i = j + 1;
  }
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i]) {
      pos_rank_sum += rank[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InputError("AUC needs both positive and negative samples");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

AucScores multiclass_auc(std::span<const int> y_true, const Matrix& probs) {
  require_same_length(y_true.size(), probs.rows(), "AUC");
  if (probs.cols() != kNumClasses) throw InputError("AUC expects 4 probability columns");
  validate_labels(y_true);
  AucScores s;
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> scores(y_true.size());
  std::vector<std::uint8_t> pos_bits(y_true.size());
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      scores[i] = probs(i, c);
      if (std::isnan(scores[i])) throw InputError("AUC: NaN score at row " + std::to_string(i));
      pos_bits[i] = static_cast<std::size_t>(y_true[i]) == c;
      n_pos += pos_bits[i];
    }
    if (n_pos == 0 || n_pos == y_true.size()) {
      s.excluded[c] = true;
      continue;
    }
    s.per_class[c] = binary_auc(scores, pos_bits);
    sum += s.per_class[c];
    ++used;
  }
  if (used == 0) throw InputError("AUC: no class has both positives and negatives");
  s.auc = sum / static_cast<double>(used);
  return s;
}

std::vector<int> argmax(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

FoldMetrics evaluate_fold(std::span<const int> y_true, const Matrix& probs) {
  FoldMetrics f;
  const auto pred = argmax(probs);
  f.confusion = confusion(y_true, pred);
  const auto prf = macro_prf(f.confusion);
  f.precision = prf.precision;
  f.recall = prf.recall;
  f.f1 = prf.f1;
  f.auc = multiclass_auc(y_true, probs).auc;
  f.loss = cross_entropy(y_true, probs);
  return f;
}

EvaluationReport evaluate(std::string name, std::span<const int> y_true, const Matrix& probs) {
  EvaluationReport r;
  r.name = std::move(name);
  r.samples = y_true.size();
  const auto pred = argmax(probs);
  r.confusion = confusion(y_true, pred);
  const auto prf = macro_prf(r.confusion);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  const auto auc = multiclass_auc(y_true, probs);
  r.auc = auc.auc;
  r.loss = cross_entropy(y_true, probs);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (prf.excluded[c]) r.warnings.push_back("class " + std::to_string(c) + " absent: excluded from macro P/R/F1");
    if (auc.excluded[c]) r.warnings.push_back("class " + std::to_string(c) + " excluded from AUC");
  }
  return r;
}

void EvaluationReport::validate() const {
  for (double v : {precision, recall, f1, auc}) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("report " + name + ": metric outside [0, 1]");
  }
  if (!(loss >= 0.0)) throw InputError("report " + name + ": negative loss");
  std::size_t total = 0;
  for (const auto& row : confusion) total += std::accumulate(row.begin(), row.end(), std::size_t{0});
  if (total != samples) throw InputError("report " + name + ": confusion total differs from sample count");
}

std::string report_json(const EvaluationReport& report) { return to_json(report).dump(2) + "\n"; }

std::string reports_json(std::span<const EvaluationReport> reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr.dump(2) + "\n";
}

std::string reports_csv(std::span<const EvaluationReport> reports) {
  std::string out = "method,precision,recall,f1,auc,loss,features,samples\n";
  for (const auto& r : reports) {
    out += r.name + ',' + format_double(r.precision) + ',' + format_double(r.recall) + ',' + format_double(r.f1) +
           ',' + format_double(r.auc) + ',' + format_double(r.loss) + ',' + std::to_string(r.feature_width) + ',' +
           std::to_string(r.samples) + '\n';
  }
  return out;
}

}  // namespace nucleifuse::metrics
