#include "nucleifuse/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "nucleifuse/classify.hpp"
#include "nucleifuse/crossval.hpp"
#include "nucleifuse/dataset.hpp"
#include "nucleifuse/descriptors.hpp"
#include "nucleifuse/ensemble.hpp"
#include "nucleifuse/error.hpp"
#include "nucleifuse/featstore.hpp"
#include "nucleifuse/image.hpp"
#include "nucleifuse/metrics.hpp"
#include "nucleifuse/plot.hpp"
#include "nucleifuse/reduction.hpp"
#include "nucleifuse/rng.hpp"

namespace nucleifuse::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace featstore;

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NUCLEIFUSE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw InputError("NUCLEIFUSE_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

namespace {

// Deep networks whose exported features may join an experiment.
const std::map<std::string, std::size_t, std::less<>> kDeepNets = {
    {"alexnet", 4096}, {"vgg16", 4096},       {"vgg19", 4096},
    {"resnet50", 2048}, {"densenet121", 1024}, {"inceptionv3", 2048}};
const std::vector<std::string> kDeepOrder = {"alexnet", "vgg16", "vgg19", "resnet50", "densenet121", "inceptionv3"};

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  std::uint32_t folds = 5;
  std::string pca = "on";
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed: " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw DependencyError("missing " + what + ": " + path.string());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Every option of the subcommand with its final value.
void write_run_config(const fs::path& dir, const CLI::App& sub) {
  json j;
  j["command"] = sub.get_name();
  json opts = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    auto key = opt->get_name();
    key.erase(0, key.find_first_not_of('-'));
    const auto results = opt->results();
    if (opt->get_items_expected_max() > 1) {
      opts[key] = results;
    } else if (!results.empty()) {
      opts[key] = results.back();
    } else if (!opt->get_default_str().empty()) {
      opts[key] = opt->get_default_str();
    } else {
      opts[key] = nullptr;
    }
  }
  j["options"] = opts;
  write_text(dir / "run_config.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Experiment manifest: named feature files plus the shared labels file.

struct FeatureEntry {
  std::string name;
  reduction::FeatureKind kind = reduction::FeatureKind::Handcrafted;
  fs::path path;
};

struct Experiment {
  fs::path labels;
  std::vector<FeatureEntry> features;

  const FeatureEntry* find(std::string_view name) const {
    for (const auto& f : features) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }
};

reduction::FeatureKind kind_of(const std::string& name) {
  if (descriptors::parse_descriptor(name)) return reduction::FeatureKind::Handcrafted;
  if (kDeepNets.contains(name)) return reduction::FeatureKind::Deep;
  throw InputError("unknown feature set '" + name + "' (expected a descriptor or network name)");
}

std::string kind_name(reduction::FeatureKind kind) {
  return kind == reduction::FeatureKind::Deep ? "deep" : "handcrafted";
}

void write_experiment(const fs::path& path, const Experiment& ex,
                      const std::map<std::string, std::pair<std::size_t, std::size_t>>& shapes) {
  json j;
  j["labels"] = ex.labels.generic_string();
  json arr = json::array();
  for (const auto& f : ex.features) {
    json e;
    e["name"] = f.name;
    e["kind"] = kind_name(f.kind);
    e["path"] = f.path.generic_string();
    if (auto it = shapes.find(f.name); it != shapes.end()) {
      e["rows"] = it->second.first;
      e["cols"] = it->second.second;
    }
    arr.push_back(e);
  }
  j["features"] = arr;
  write_text(path, j.dump(2) + "\n");
}

Experiment read_experiment(const fs::path& path) {
  require_file(path, "experiment manifest");
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  Experiment ex;
  if (!j.is_object()) throw InputError(path.string() + ": expected a JSON object at /");
  if (j.contains("labels")) {
    if (!j["labels"].is_string()) throw InputError(path.string() + ": /labels must be a string");
    ex.labels = base / j["labels"].get<std::string>();
  }
  if (j.contains("features")) {
    if (!j["features"].is_array()) throw InputError(path.string() + ": /features must be an array");
    for (std::size_t i = 0; i < j["features"].size(); ++i) {
      const auto& e = j["features"][i];
      const std::string at = path.string() + ": /features/" + std::to_string(i);
      if (!e.is_object()) throw InputError(at + " must be an object");
      for (const char* key : {"name", "path"}) {
        if (!e.contains(key) || !e[key].is_string()) throw InputError(at + "/" + key + " must be a string");
      }
      FeatureEntry f;
      f.name = e["name"].get<std::string>();
      f.kind = kind_of(f.name);
      f.path = base / e["path"].get<std::string>();
      ex.features.push_back(std::move(f));
    }
  }
  return ex;
}

// --manifest plus --feature name=path and --labels overrides.
Experiment resolve_experiment(const std::string& manifest, const std::vector<std::string>& extra,
                              const std::string& labels) {
  Experiment ex;
  if (!manifest.empty()) ex = read_experiment(manifest);
  for (const auto& spec : extra) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw InputError("--feature expects name=path, got '" + spec + "'");
    }
    FeatureEntry f{spec.substr(0, eq), kind_of(spec.substr(0, eq)), spec.substr(eq + 1)};
    auto it = std::find_if(ex.features.begin(), ex.features.end(), [&](const auto& e) { return e.name == f.name; });
    if (it != ex.features.end()) {
      *it = std::move(f);
    } else {
      ex.features.push_back(std::move(f));
    }
  }
  if (!labels.empty()) ex.labels = labels;
  if (ex.labels.empty()) throw InputError("no labels file given (--labels or manifest /labels)");
  return ex;
}

FeatureMatrix load_feature(const FeatureEntry& entry) {
  require_file(entry.path, entry.name + " features");
  auto m = read_featmat(entry.path);
  if (auto it = kDeepNets.find(entry.name); it != kDeepNets.end() && m.cols() != it->second) {
    throw InputError(entry.name + " features have " + std::to_string(m.cols()) + " columns, expected " +
                     std::to_string(it->second));
  }
  if (auto id = descriptors::parse_descriptor(entry.name); id && m.cols() != descriptors::dimension(*id)) {
    throw InputError(entry.name + " features have " + std::to_string(m.cols()) + " columns, expected " +
                     std::to_string(descriptors::dimension(*id)));
  }
  m.blocks = {ColumnBlock{entry.name, m.cols()}};
  return m;
}

Labels load_labels(const Experiment& ex) {
  require_file(ex.labels, "labels file");
  return read_labels(ex.labels);
}

// Expands set names: "hcf" is every descriptor, "deep" every network.
std::vector<std::string> expand_sets(const std::vector<std::string>& sets) {
  std::vector<std::string> out;
  auto add = [&](const std::string& n) {
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  for (const auto& s : sets) {
    if (s == "hcf" || s == "hc-f") {
      for (auto id : descriptors::kAllDescriptors) add(std::string(descriptors::name(id)));
    } else if (s == "deep" || s == "dl") {
      for (const auto& n : kDeepOrder) add(n);
    } else {
      kind_of(s);
      add(s);
    }
  }
  return out;
}

std::string sets_label(const std::vector<std::string>& sets) {
  std::string out;
  for (const auto& s : sets) {
    std::string part = s == "hcf" || s == "hc-f" ? "HC-F" : s == "deep" || s == "dl" ? "Deep-F" : s;
    out += out.empty() ? part : "+" + part;
  }
  return out;
}

bool pca_enabled(const Common& c) { return c.pca == "on"; }

classify::TrainConfig train_config(const Common& c, std::size_t epochs) {
  classify::TrainConfig cfg;
  cfg.seed = c.seed;
  cfg.max_epochs = epochs;
  cfg.validate();
  return cfg;
}

std::string loss_trace_csv(const classify::MlpModel& model) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n";
  char buf[96];
  for (std::size_t e = 0; e < model.trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", e, model.trace[e].train_loss, model.trace[e].val_loss);
    os << buf;
  }
  return os.str();
}

void write_reports(const fs::path& dir, std::span<const metrics::EvaluationReport> reports) {
  for (const auto& r : reports) r.validate();
  write_text(dir / "reports.json", metrics::reports_json(reports));
  write_text(dir / "reports.csv", metrics::reports_csv(reports));
}

// ---------------------------------------------------------------------------
// Commands

void cmd_extract(const Common& c, const std::string& format, const std::string& input, const std::string& name) {
  require_file(input, "dataset directory");
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(input)) {
    const auto p = e.path();
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    const bool is_image = ext == ".png" || ext == ".bmp" || ext == ".tif" || ext == ".tiff" || ext == ".jpg";
    if (!is_image || p.stem().string().ends_with("_class")) continue;
    images.push_back(p);
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw InputError("no images found in " + input);

  dataset::PatchArchive archive;
  for (const auto& img_path : images) {
    const auto stem = img_path.stem().string();
    const auto image = load_rgb(img_path);
    std::vector<ImagePatch> patches;
    if (format == "crchisto") {
      auto csv = img_path.parent_path() / (stem + ".csv");
      require_file(csv, "annotations for " + img_path.filename().string());
      const auto centers = dataset::read_annotations(csv);
      patches = dataset::extract_patches(image, centers, stem);
    } else {
      auto map_path = img_path.parent_path() / (stem + "_class.png");
      require_file(map_path, "class map for " + img_path.filename().string());
      patches = dataset::extract_from_class_map(image, load_class_map(map_path), stem);
    }
    for (auto& p : patches) archive.patches.push_back(std::move(p));
  }
  archive.manifest.name = name.empty() ? format : name;
  for (std::size_t k = 0; k < kNumClasses; ++k) archive.manifest.class_names[k] = dataset::kClassNames[k];
  archive.manifest.counts_before = dataset::class_counts(archive.labels());
  archive.manifest.counts_after = archive.manifest.counts_before;
  archive.manifest.seed = c.seed;
  dataset::write_archive(c.out, archive);
  std::cout << "extracted " << archive.patches.size() << " patches from " << images.size() << " images\n";
}

void cmd_balance(const Common& c, const std::string& input, std::size_t k) {
  auto archive = dataset::read_archive(input);
  archive.patches = dataset::adasyn_balance_patches(archive.patches, k, c.seed);
  archive.manifest.counts_after = dataset::class_counts(archive.labels());
  archive.manifest.seed = c.seed;
  dataset::write_archive(c.out, archive);
  std::cout << "balanced to " << archive.patches.size() << " patches\n";
}

void cmd_features(const Common& c, const std::string& input, const std::string& desc, const std::string& codebook_path) {
  const auto archive = dataset::read_archive(input);
  std::vector<descriptors::DescriptorId> which;
  for (const auto& n : split_list(desc)) {
    if (n == "all") {
      which.assign(descriptors::kAllDescriptors.begin(), descriptors::kAllDescriptors.end());
      continue;
    }
    auto id = descriptors::parse_descriptor(n);
    if (!id) throw InputError("--desc: unknown descriptor '" + n + "'");
    if (std::find(which.begin(), which.end(), *id) == which.end()) which.push_back(*id);
  }
  if (which.empty()) throw InputError("--desc: no descriptors selected");

  const fs::path out(c.out);
  std::optional<descriptors::BovwCodebook> codebook;
  if (std::find(which.begin(), which.end(), descriptors::DescriptorId::BOVW) != which.end()) {
    if (!codebook_path.empty()) {
      require_file(codebook_path, "BoVW codebook");
      codebook = descriptors::BovwCodebook{read_featmat(codebook_path).values, c.seed};
    } else {
      codebook = descriptors::bovw_fit(archive.patches, c.seed);
      write_featmat(codebook->centers, "bovw-codebook", out / "bovw_codebook.featmat");
    }
  }
  const auto mats = descriptors::extract_all(archive.patches, codebook ? &*codebook : nullptr, which, worker_threads());

  Experiment ex;
  ex.labels = "labels.csv";
  std::map<std::string, std::pair<std::size_t, std::size_t>> shapes;
  for (auto id : which) {
    const std::string n(descriptors::name(id));
    const auto& m = mats.at(id);
    write_featmat(m, out / (n + ".featmat"));
    ex.features.push_back({n, reduction::FeatureKind::Handcrafted, n + ".featmat"});
    shapes[n] = {m.rows(), m.cols()};
    std::cout << n << ": " << m.rows() << " x " << m.cols() << "\n";
  }
  write_labels(archive.labels(), out / "labels.csv");
  write_experiment(out / "experiment.json", ex, shapes);
}

void cmd_reduce(const Common& c, const std::string& input, std::size_t k, const std::string& kind,
                const std::string& model_path) {
  require_file(input, "feature file");
  const auto x = read_featmat(input);
  const fs::path out(c.out);
  reduction::PcaModel model;
  if (!model_path.empty()) {
    require_file(model_path, "PCA model");
    model = reduction::read_pca(model_path);
  } else {
    const auto fk = kind == "deep" ? reduction::FeatureKind::Deep : reduction::FeatureKind::Handcrafted;
    const std::size_t comps = k > 0 ? k : reduction::policy_components(fk, x.cols());
    model = reduction::pca_fit(x.values, comps);
    reduction::write_pca(model, out / "pca.model");
  }
  const auto y = reduction::pca_transform(model, x.values);
  auto id = x.source_id();
  if (id.size() > 28) id.resize(28);
  write_featmat(y, id + "-pca", out / (fs::path(input).stem().string() + "_pca.featmat"));
  std::cout << "reduced " << x.cols() << " -> " << y.cols() << " columns\n";
}

void cmd_train(const Common& c, const std::string& features, const std::string& labels_path,
               const std::string& kind, std::size_t epochs) {
  require_file(features, "feature file");
  require_file(labels_path, "labels file");
  const auto x = read_featmat(features);
  const auto y = read_labels(labels_path);
  require_aligned(x, y);
  const fs::path out(c.out);
  const auto cfg = train_config(c, epochs);
  const auto fk = kind == "deep" ? reduction::FeatureKind::Deep : reduction::FeatureKind::Handcrafted;
  const std::optional<reduction::FeatureKind> pca = pca_enabled(c) ? std::optional(fk) : std::nullopt;

  const auto folds = dataset::make_folds(y, c.folds, c.seed);
  const auto cv = crossval::cross_validate(x, y, folds, cfg, x.source_id(), pca);
  const std::array<metrics::EvaluationReport, 1> reports = {cv.report};
  write_reports(out, reports);
  write_featmat(cv.oof.values, "oof-probs", out / "oof_probs.featmat");

  // Final model on every row.
  Matrix train_x = x.values;
  if (pca) {
    const auto model = reduction::pca_fit(x.values, std::min(reduction::policy_components(fk, x.cols()), x.rows() - 1));
    reduction::write_pca(model, out / "pca.model");
    train_x = reduction::pca_transform(model, x.values);
  }
  const auto mlp = classify::mlp_train_holdout(train_x, y, cfg);
  classify::write_mlp(mlp, out / "model.mlp");
  write_text(out / "loss_trace.csv", loss_trace_csv(mlp));
  std::vector<std::string> epochs_axis;
  plot::Series tr{"train", {}}, va{"validation", {}};
  for (std::size_t e = 0; e < mlp.trace.size(); ++e) {
    epochs_axis.push_back(e % 10 == 0 ? std::to_string(e) : "");
    tr.y.push_back(mlp.trace[e].train_loss);
    va.y.push_back(mlp.trace[e].val_loss);
  }
  write_text(out / "loss_trace.svg", plot::line_plot_svg("MLP training loss", epochs_axis, {tr, va}, "cross-entropy"));
  std::cout << cv.report.name << ": F1 " << cv.report.f1 << ", AUC " << cv.report.auc << ", loss " << cv.report.loss
            << "\n";
}

void cmd_cascade(const Common& c, const Experiment& ex, std::size_t epochs) {
  const auto labels = load_labels(ex);
  const fs::path out(c.out);
  const auto cfg = train_config(c, epochs);
  const auto folds = dataset::make_folds(labels, c.folds, c.seed);

  std::vector<ProbabilityMatrix> hcf, deep;
  std::vector<metrics::EvaluationReport> member_reports;
  for (const auto& entry : ex.features) {
    const auto x = load_feature(entry);
    require_aligned(x, labels);
    auto member_cfg = cfg;
    member_cfg.seed = derive_seed(c.seed, 100 + member_reports.size());
    const std::optional<reduction::FeatureKind> pca = pca_enabled(c) ? std::optional(entry.kind) : std::nullopt;
    auto res = ensemble::member_probabilities(x, labels, folds, member_cfg, pca);
    res.oof.source_id = entry.name;
    res.report.name = entry.name;
    member_reports.push_back(res.report);
    (entry.kind == reduction::FeatureKind::Deep ? deep : hcf).push_back(std::move(res.oof));
  }
  if (hcf.size() < 2) throw InputError("cascade: need at least 2 handcrafted feature sets, got " + std::to_string(hcf.size()));
  if (deep.size() < 2) throw InputError("cascade: need at least 2 deep feature sets, got " + std::to_string(deep.size()));

  ensemble::CascadeConfig cc;
  cc.folds = c.folds;
  cc.seed = c.seed;
  cc.mlp = cfg;
  const auto result = ensemble::cascade_run(hcf, deep, labels, cc);
  const auto reports = result.reports();
  write_text(out / "members.csv", metrics::reports_csv(member_reports));
  write_reports(out, reports);
  const std::array<std::pair<const ensemble::StageResult*, const char*>, 3> stages = {
      std::pair{&result.hcf, "hf_ensemble"}, std::pair{&result.deep, "deep_ensemble"},
      std::pair{&result.combined, "combined_ensemble"}};
  for (const auto& [stage, stem] : stages) {
    write_featmat(stage->pooled, std::string(stem) + "-pooled", out / (std::string(stem) + "_pooled.featmat"));
    write_featmat(stage->cv.oof.values, std::string(stem) + "-probs", out / (std::string(stem) + "_probs.featmat"));
  }
  write_labels(labels, out / "labels.csv");
  for (const auto& r : reports) std::cout << r.name << ": F1 " << r.f1 << ", AUC " << r.auc << ", loss " << r.loss << "\n";
}

void cmd_concat(const Common& c, const Experiment& ex, const std::string& sets_arg, std::size_t epochs) {
  const auto sets = split_list(sets_arg);
  if (sets.empty()) throw InputError("--sets: no feature sets given");
  const auto names = expand_sets(sets);
  const auto labels = load_labels(ex);
  const bool pca = pca_enabled(c);

  std::vector<FeatureMatrix> mats;
  mats.reserve(names.size());
  for (const auto& n : names) {
    const auto* entry = ex.find(n);
    if (!entry) throw DependencyError("missing feature file for '" + n + "'");
    mats.push_back(load_feature(*entry));
    require_aligned(mats.back(), labels);
  }
  std::vector<ensemble::ConcatMember> members;
  std::vector<std::pair<std::size_t, reduction::FeatureKind>> dims;
  for (std::size_t i = 0; i < names.size(); ++i) {
    members.push_back({&mats[i], kind_of(names[i])});
    dims.emplace_back(mats[i].cols(), kind_of(names[i]));
  }
  const auto cfg = train_config(c, epochs);
  const auto folds = dataset::make_folds(labels, c.folds, c.seed);
  auto report = ensemble::concat_run(members, pca, labels, folds, cfg, sets_label(sets) + (pca ? " (PCA)" : ""));
  const std::size_t policy_width = ensemble::concat_width(dims, pca);
  if (report.feature_width != policy_width) {
    report.warnings.push_back("feature width " + std::to_string(report.feature_width) + " below policy width " +
                              std::to_string(policy_width) + " (too few training rows for the full PCA)");
  }
  const fs::path out(c.out);
  const std::array<metrics::EvaluationReport, 1> reports = {report};
  write_reports(out, reports);
  json widths = {{"sets", names}, {"policy_width", policy_width}, {"feature_width", report.feature_width}};
  write_text(out / "widths.json", widths.dump(2) + "\n");
  std::cout << report.name << ": width " << policy_width << ", F1 " << report.f1 << "\n";
}

void cmd_select(const Common& c, const Experiment& ex, std::size_t epochs, std::size_t knn_k) {
  const auto labels = load_labels(ex);
  std::vector<FeatureMatrix> mats;
  for (const auto& entry : ex.features) {
    if (entry.kind != reduction::FeatureKind::Handcrafted) continue;
    mats.push_back(load_feature(entry));
    require_aligned(mats.back(), labels);
  }
  if (mats.empty()) throw DependencyError("select-classifier: no handcrafted feature files given");
  classify::SelectionOptions opts;
  opts.folds = c.folds;
  opts.seed = c.seed;
  opts.knn_k = knn_k;
  opts.mlp = train_config(c, epochs);
  const std::array kinds = {classify::ClassifierKind::Mlp, classify::ClassifierKind::Knn, classify::ClassifierKind::Tree};
  const auto table = classify::classifier_selection(mats, labels, kinds, opts);
  const fs::path out(c.out);
  write_text(out / "selection.csv", table.to_csv());
  write_text(out / "selection.svg", plot::selection_svg(table));
  std::cout << table.to_csv();
}

void cmd_histograms(const Common& c, const std::string& probs_path, const std::string& labels_path, std::size_t bins,
                    const std::string& title) {
  require_file(probs_path, "probability file");
  require_file(labels_path, "labels file");
  const auto probs = read_featmat(probs_path);
  const auto labels = read_labels(labels_path);
  require_aligned(probs, labels);
  const auto hist = ensemble::probability_histograms(probs.values, labels, bins);
  const fs::path out(c.out);
  write_text(out / "histograms.csv", hist.to_csv());
  write_text(out / "histograms.svg", plot::histograms_svg(title.empty() ? probs.source_id() : title, hist));
}

// ---------------------------------------------------------------------------
// --config: JSON object whose keys name options of the subcommand. Values
// given on the command line take precedence.

std::vector<std::string> merge_config(const std::vector<std::string>& args, CLI::App& app,
                                      std::map<std::string, std::string>& from_config) {
  if (args.size() < 2) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[1]);
  if (!sub) return args;
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  if (!fs::exists(path)) throw DependencyError("missing config file: " + path);

  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InputError("config " + path + ": expected an object at /");

  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin() + 2, args.end(),
                       [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
  };
  auto scalar = [&](const json& v, const std::string& field) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "on" : "off";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return v.dump();
    throw InputError("config " + path + ": " + field + " must be a string, number or boolean");
  };

  std::vector<std::string> out = args;
  for (const auto& [key, value] : j.items()) {
    const std::string field = "/" + key;
    if (key == "config") throw InputError("config " + path + ": " + field + " is not allowed");
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw InputError("config " + path + ": unknown field " + field + " for '" + sub->get_name() + "'");
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(flag);
        out.push_back(scalar(value[i], field + "/" + std::to_string(i)));
      }
    } else {
      out.push_back(flag);
      out.push_back(scalar(value, field));
    }
    from_config[flag] = field;
  }
  return out;
}

int run_impl(const std::vector<std::string>& raw_args) {
  CLI::App app{"Nucleus patch classification with handcrafted and deep feature ensembles", "nucleifuse"};
  app.require_subcommand(1);

  Common c;
  auto add_common = [&](CLI::App* sub, bool folds, bool pca) {
    sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
    sub->add_option("--out", c.out, "output directory")->required();
    sub->add_option("--config", c.config, "JSON file with option values");
    if (folds) sub->add_option("--folds", c.folds, "cross-validation folds")->check(CLI::IsMember({2, 5, 10}))->capture_default_str();
    if (pca) sub->add_option("--pca", c.pca, "per-set PCA")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  };

  std::string format = "crchisto", input, name, desc = "all", codebook, kind = "handcrafted", model, features, labels,
              manifest, sets, probs, title;
  std::vector<std::string> extra;
  std::size_t k_neighbors = 5, k_components = 0, epochs = 100, knn_k = 5, bins = 10;

  auto* extract = app.add_subcommand("extract", "extract 27x27 nucleus patches into an archive");
  add_common(extract, false, false);
  extract->add_option("--format", format, "annotation format")->check(CLI::IsMember({"crchisto", "consep"}))->capture_default_str();
  extract->add_option("--input", input, "dataset directory")->required();
  extract->add_option("--name", name, "dataset name for the manifest");

  auto* balance = app.add_subcommand("balance", "ADASYN-balance a patch archive");
  add_common(balance, false, false);
  balance->add_option("--archive", input, "input archive directory")->required();
  balance->add_option("--k", k_neighbors, "nearest neighbours")->check(CLI::PositiveNumber)->capture_default_str();

  auto* feats = app.add_subcommand("features", "compute handcrafted descriptors");
  add_common(feats, false, false);
  feats->add_option("--archive", input, "patch archive directory")->required();
  feats->add_option("--desc", desc, "comma-separated descriptors or 'all'")->capture_default_str();
  feats->add_option("--codebook", codebook, "existing BoVW codebook FEATMAT");

  auto* reduce = app.add_subcommand("reduce", "PCA-reduce a feature matrix");
  add_common(reduce, false, false);
  reduce->add_option("--in", input, "feature FEATMAT")->required();
  reduce->add_option("--k", k_components, "components (0 = policy for --kind)")->capture_default_str();
  reduce->add_option("--kind", kind, "feature kind")->check(CLI::IsMember({"handcrafted", "deep"}))->capture_default_str();
  reduce->add_option("--model", model, "apply an existing PCA model instead of fitting");

  auto* train = app.add_subcommand("train", "cross-validate and train an MLP on one feature set");
  add_common(train, true, true);
  train->add_option("--features", features, "feature FEATMAT")->required();
  train->add_option("--labels", labels, "labels CSV")->required();
  train->add_option("--kind", kind, "feature kind")->check(CLI::IsMember({"handcrafted", "deep"}))->capture_default_str();
  train->add_option("--epochs", epochs, "maximum epochs")->capture_default_str();

  auto add_experiment = [&](CLI::App* sub) {
    sub->add_option("--manifest", manifest, "experiment manifest JSON");
    sub->add_option("--feature", extra, "extra feature file, name=path");
    sub->add_option("--labels", labels, "labels CSV (overrides the manifest)");
    sub->add_option("--epochs", epochs, "maximum epochs")->capture_default_str();
  };
  auto* cascade = app.add_subcommand("cascade", "cascaded probability-pooling ensemble");
  add_common(cascade, true, true);
  add_experiment(cascade);

  auto* concat = app.add_subcommand("concat", "feature-concatenation ensemble");
  add_common(concat, true, true);
  add_experiment(concat);
  concat->add_option("--sets", sets, "e.g. hcf | deep | hcf,deep | hcf,resnet50")->required();

  auto* select = app.add_subcommand("select-classifier", "compare MLP, KNN and tree losses per descriptor");
  add_common(select, true, false);
  add_experiment(select);
  select->add_option("--knn-k", knn_k, "neighbours for KNN")->check(CLI::PositiveNumber)->capture_default_str();

  auto* hist = app.add_subcommand("histograms", "per-class predicted probability histograms");
  add_common(hist, false, false);
  hist->add_option("--probs", probs, "probability FEATMAT")->required();
  hist->add_option("--labels", labels, "labels CSV")->required();
  hist->add_option("--bins", bins, "bins")->check(CLI::Range(std::size_t{2}, std::size_t{1000}))->capture_default_str();
  hist->add_option("--title", title, "plot title");

  std::map<std::string, std::string> from_config;
  auto args = merge_config(raw_args, app, from_config);
  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (const auto& [flag, field] : from_config) {
      if (msg.find(flag) != std::string::npos) msg = "config field " + field + ": " + msg;
    }
    std::cerr << "error: " << msg << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  fs::create_directories(c.out);
  write_run_config(c.out, *sub);

  const std::string cmd = sub->get_name();
  if (cmd == "extract") {
    cmd_extract(c, format, input, name);
  } else if (cmd == "balance") {
    cmd_balance(c, input, k_neighbors);
  } else if (cmd == "features") {
    cmd_features(c, input, desc, codebook);
  } else if (cmd == "reduce") {
    cmd_reduce(c, input, k_components, kind, model);
  } else if (cmd == "train") {
    cmd_train(c, features, labels, kind, epochs);
  } else if (cmd == "cascade") {
    cmd_cascade(c, resolve_experiment(manifest, extra, labels), epochs);
  } else if (cmd == "concat") {
    cmd_concat(c, resolve_experiment(manifest, extra, labels), sets, epochs);
  } else if (cmd == "select-classifier") {
    cmd_select(c, resolve_experiment(manifest, extra, labels), epochs, knn_k);
  } else if (cmd == "histograms") {
    cmd_histograms(c, probs, labels, bins, title);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return run_impl(args);
  } catch (const DependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace nucleifuse::cli
