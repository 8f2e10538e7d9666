#include "dndt/app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dndt/analysis.hpp"
#include "dndt/cart.hpp"
#include "dndt/data.hpp"
#include "dndt/dot.hpp"
#include "dndt/errors.hpp"
#include "dndt/forest.hpp"
#include "dndt/serialize.hpp"
#include "dndt/train.hpp"

namespace dndt {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* k_default_out_dir = "dndt_out";
constexpr const char* k_out_dir_env = "DNDT_OUT_DIR";

struct DataFlags {
  std::string dataset;
  std::string csv;
  std::string label_col;
  std::vector<std::string> categorical;
  std::vector<std::string> features;
};

struct TrainFlags {
  std::size_t cutpoints = 1;
  std::string init = "quantile";
  double tau = 0.1;
  double anneal = 0.99;
  double tau_floor = 0.01;
  bool st_gumbel = false;
  std::string optimizer = "adam";
  double lr = 0.01;
  std::size_t batch = 32;
  std::size_t epochs = 200;
  double weight_decay = 0.001;
  std::uint64_t seed = 0;
  std::size_t trees = 0;  // 0: forest only when the data is wide
  std::size_t subset = k_default_subset_size;
  double split = 0.8;
};

struct Options {
  DataFlags data;
  TrainFlags train;
  std::string out_dir;
  std::string model_path;
  std::string part = "all";
  std::size_t runs = 10;
  std::vector<std::size_t> counts = {1, 2, 3, 4, 5};
  std::optional<std::size_t> max_depth;
  std::size_t tree_index = 0;
  std::string output_file;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void add_data_flags(CLI::App* cmd, DataFlags& f, bool required) {
  auto* group = cmd->add_option_group("data", "dataset selection");
  group->add_option("--dataset", f.dataset, "bundled dataset name (iris, haberman)");
  group->add_option("--csv", f.csv, "path to a CSV file with a header row");
  if (required) {
    group->require_option(1);
  } else {
    group->require_option(0, 1);
  }
  cmd->add_option("--label-col", f.label_col, "label column name or index (default: last)");
  cmd->add_option("--categorical", f.categorical, "columns to ordinal-encode")->delimiter(',');
  cmd->add_option("--features", f.features, "feature columns to keep, by name or index")->delimiter(',');
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--cutpoints", f.cutpoints, "cut points per feature")->capture_default_str();
  cmd->add_option("--init", f.init, "cut point initialization: quantile or uniform")->capture_default_str();
  cmd->add_option("--tau", f.tau, "initial softmax temperature")->capture_default_str();
  cmd->add_option("--anneal", f.anneal, "per-epoch temperature decay (1 disables annealing)")->capture_default_str();
  cmd->add_option("--tau-floor", f.tau_floor, "lowest annealed temperature")->capture_default_str();
  cmd->add_flag("--st-gumbel", f.st_gumbel, "train with straight-through Gumbel-softmax binning");
  cmd->add_option("--optimizer", f.optimizer, "sgd, sgd-momentum or adam")->capture_default_str();
  cmd->add_option("--lr", f.lr, "learning rate")->capture_default_str();
  cmd->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--weight-decay", f.weight_decay, "L2 penalty on leaf scores")->capture_default_str();
  cmd->add_option("--seed", f.seed, "master seed")->capture_default_str();
  cmd->add_option("--trees", f.trees, "forest size (default: a forest of 10 only for more than 12 features)");
  cmd->add_option("--subset", f.subset, "features per forest tree")->capture_default_str();
  cmd->add_option("--split", f.split, "training fraction of the stratified split (1 trains on everything)")
      ->capture_default_str();
}

void add_out_flag(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out_dir, std::string("output directory (default: $") + k_out_dir_env + " or " +
                                          k_default_out_dir + ")");
}

TrainConfig make_config(const TrainFlags& f) {
  TrainConfig c;
  c.cutpoints_per_feature = f.cutpoints;
  if (f.init == "quantile") {
    c.cutpoint_init = CutpointInit::Quantile;
  } else if (f.init == "uniform") {
    c.cutpoint_init = CutpointInit::Uniform;
  } else {
    throw ConfigError("unknown --init '" + f.init + "' (expected quantile or uniform)");
  }
  c.temperature = {f.tau, f.anneal, std::min(f.tau_floor, f.tau)};
  c.st_gumbel = f.st_gumbel;
  c.optimizer = parse_optimizer(f.optimizer);
  c.learning_rate = f.lr;
  c.batch_size = f.batch;
  c.epochs = f.epochs;
  c.weight_decay = f.weight_decay;
  c.seed = f.seed;
  c.validate();
  if (!(f.split > 0.0 && f.split <= 1.0)) throw ConfigError("--split must lie in (0, 1]");
  return c;
}

Json config_json(const TrainFlags& f) {
  return Json{{"cutpoints", f.cutpoints}, {"init", f.init},       {"tau", f.tau},
              {"anneal", f.anneal},       {"tau_floor", f.tau_floor}, {"st_gumbel", f.st_gumbel},
              {"optimizer", f.optimizer}, {"lr", f.lr},           {"batch", f.batch},
              {"epochs", f.epochs},       {"weight_decay", f.weight_decay}, {"seed", f.seed},
              {"trees", f.trees},         {"subset", f.subset},   {"split", f.split}};
}

std::size_t find_column(const std::vector<std::string>& names, const std::string& ref) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == ref) return i;
  if (!ref.empty() && std::all_of(ref.begin(), ref.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const std::size_t idx = std::stoul(ref);
    if (idx < names.size()) return idx;
  }
  throw DataError(DataError::Kind::Schema, "feature '" + ref + "' not found");
}

struct LoadedData {
  Dataset data;
  LoadResult info;
};

LoadedData load_data(const DataFlags& f) {
  LoadOptions opts;
  if (!f.label_col.empty()) opts.label_column = f.label_col;
  opts.categorical = f.categorical;
  LoadedData out;
  out.info = f.csv.empty() ? load_bundled(f.dataset, opts) : load_csv(f.csv, opts);
  out.data = out.info.dataset;
  if (!f.features.empty()) {
    std::vector<std::size_t> idx;
    for (const std::string& ref : f.features) idx.push_back(find_column(out.data.feature_names, ref));
    out.data = select_features(out.data, idx);
  }
  return out;
}

Json data_json(const LoadedData& d) {
  return Json{{"source", d.info.source},
              {"fingerprint", hex64(d.info.fingerprint)},
              {"rows", d.data.n_rows},
              {"features", d.data.feature_names},
              {"classes", d.data.class_names},
              {"dropped_rows", d.info.dropped_rows}};
}

// Reorders columns and relabels rows to match a trained model's schema.
Dataset align(const Dataset& data, const std::vector<std::string>& features, const std::vector<std::string>& classes) {
  std::vector<std::size_t> idx;
  for (const std::string& name : features) {
    const auto it = std::find(data.feature_names.begin(), data.feature_names.end(), name);
    if (it == data.feature_names.end()) {
      throw DataError(DataError::Kind::Schema, "dataset lacks the model feature '" + name + "'");
    }
    idx.push_back(static_cast<std::size_t>(it - data.feature_names.begin()));
  }
  Dataset out = select_features(data, idx);
  std::vector<std::size_t> remap;
  for (const std::string& name : data.class_names) {
    const auto it = std::find(classes.begin(), classes.end(), name);
    remap.push_back(it == classes.end() ? classes.size() : static_cast<std::size_t>(it - classes.begin()));
  }
  for (std::size_t& y : out.labels) {
    if (remap[y] == classes.size()) {
      throw DataError(DataError::Kind::Schema, "dataset class '" + data.class_names[y] + "' is unknown to the model");
    }
    y = remap[y];
  }
  out.class_names = classes;
  return out;
}

struct Split {
  Dataset train;
  std::optional<Dataset> test;
};

Split split_data(const Dataset& data, double fraction, std::uint64_t seed) {
  if (fraction >= 1.0) return {data, std::nullopt};
  const SplitIndices idx = stratified_split(data, fraction, seed);
  return {subset_rows(data, idx.train), subset_rows(data, idx.test)};
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& flag) {
    if (!flag.empty()) {
      dir_ = flag;
    } else if (const char* env = std::getenv(k_out_dir_env); env && *env) {
      dir_ = env;
    } else {
      dir_ = k_default_out_dir;
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw DataError(DataError::Kind::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& text) {
    write_text_file((dir_ / name).string(), text);
    artifacts_.push_back(name);
  }

  const fs::path& path() const { return dir_; }

  // Lists every artifact written so far and the elapsed wall time.
  void write_manifest(const std::string& command, Json body, Clock::time_point start) {
    body["artifacts"] = artifacts_;
    body["timings"] = {{"total_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
    Json manifest{{"command", command}};
    manifest.update(body);
    write_text_file((dir_ / ("manifest_" + command + ".json")).string(), manifest.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::vector<std::string> artifacts_;
};

struct ClassMetrics {
  double accuracy = 0.0;
  std::vector<double> precision, recall;
  std::vector<std::size_t> support;
};

ClassMetrics class_metrics(std::span<const std::size_t> predicted, std::span<const std::size_t> labels,
                           std::size_t classes) {
  ClassMetrics m;
  m.accuracy = accuracy(predicted, labels);
  std::vector<std::size_t> tp(classes, 0), pred(classes, 0);
  m.support.assign(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++m.support[labels[i]];
    ++pred[predicted[i]];
    if (predicted[i] == labels[i]) ++tp[labels[i]];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    m.precision.push_back(pred[c] ? static_cast<double>(tp[c]) / static_cast<double>(pred[c]) : 0.0);
    m.recall.push_back(m.support[c] ? static_cast<double>(tp[c]) / static_cast<double>(m.support[c]) : 0.0);
  }
  return m;
}

Json metrics_json(const ClassMetrics& m, const std::vector<std::string>& classes) {
  Json per_class = Json::array();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    per_class.push_back(
        {{"class", classes[c]}, {"precision", m.precision[c]}, {"recall", m.recall[c]}, {"support", m.support[c]}});
  }
  return Json{{"accuracy", m.accuracy}, {"per_class", per_class}};
}

bool wants_forest(const TrainFlags& f, std::size_t n_features) {
  return f.trees > 0 || n_features > k_forest_feature_threshold;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const TrainConfig config = make_config(o.train);
  const LoadedData loaded = load_data(o.data);
  const Split split = split_data(loaded.data, o.train.split, o.train.seed);
  OutputDir dir(o.out_dir);
  Json model_info;
  Json metrics;

  if (wants_forest(o.train, loaded.data.n_features)) {
    const std::size_t n_trees = o.train.trees ? o.train.trees : k_default_forest_trees;
    const ForestModel forest = fit_forest(split.train, config, n_trees, o.train.subset);
    dir.write("forest.json", forest_to_json(forest));
    std::string report = "tree,features,final_loss,train_acc\n";
    for (std::size_t t = 0; t < forest.n_trees(); ++t) {
      const ForestMember& m = forest.trees[t];
      std::string feats;
      for (std::size_t f : m.features) feats += (feats.empty() ? "" : " ") + std::to_string(f);
      const EpochRecord& last = m.report.epochs.back();
      report += std::to_string(t) + "," + feats + "," + fmt(last.loss) + "," + fmt(last.train_accuracy) + "\n";
    }
    dir.write("forest_report.csv", report);
    metrics["train_accuracy"] = accuracy(predict_forest(split.train, forest), split.train.labels);
    if (split.test) metrics["test_accuracy"] = accuracy(predict_forest(*split.test, forest), split.test->labels);
    model_info = {{"kind", "forest"}, {"trees", n_trees}, {"subset", o.train.subset}};
    out << "trained a forest of " << n_trees << " trees x " << o.train.subset << " features\n";
  } else {
    const FitResult fitted = fit(split.train, config, split.test ? &*split.test : nullptr);
    dir.write("model.json", model_to_json(fitted.model));
    dir.write("train_report.csv", fitted.report.to_csv());
    const EpochRecord& last = fitted.report.epochs.back();
    metrics["train_accuracy"] = last.train_accuracy;
    if (last.validation_accuracy) metrics["test_accuracy"] = *last.validation_accuracy;
    metrics["final_loss"] = last.loss;
    model_info = {{"kind", "tree"}, {"leaves", fitted.model.leaf_count()}};
    out << "trained a tree with " << fitted.model.leaf_count() << " leaves\n";
  }
  metrics["n_train"] = split.train.n_rows;
  metrics["n_test"] = split.test ? split.test->n_rows : 0;
  dir.write("metrics.json", metrics.dump(2) + "\n");

  out << "train accuracy " << fixed4(metrics["train_accuracy"].get<double>());
  if (metrics.contains("test_accuracy")) out << ", test accuracy " << fixed4(metrics["test_accuracy"].get<double>());
  out << "\nartifacts in " << dir.path().string() << "\n";
  dir.write_manifest("train",
                     {{"config", config_json(o.train)}, {"dataset", data_json(loaded)}, {"seed", o.train.seed},
                      {"model", model_info}},
                     start);
  return k_exit_ok;
}

// Model features and classes, whichever kind was loaded.
std::pair<std::vector<std::string>, std::vector<std::string>> schema_of(const AnyModel& m) {
  return std::visit(
      [](const auto& model) -> std::pair<std::vector<std::string>, std::vector<std::string>> {
        return {model.feature_names, model.class_names};
      },
      m);
}

std::vector<std::size_t> predict_any(const AnyModel& m, const Dataset& data) {
  if (const auto* tree = std::get_if<DndtModel>(&m)) return predict_raw(data, *tree);
  if (const auto* forest = std::get_if<ForestModel>(&m)) return predict_forest(data, *forest);
  return predict_cart(data, std::get<CartTree>(m));
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const AnyModel model = any_model_from_json(read_text_file(o.model_path));
  const LoadedData loaded = load_data(o.data);
  const auto [features, classes] = schema_of(model);
  Dataset data = align(loaded.data, features, classes);
  if (o.part != "all") {
    // Reproduces the split made by `train` with the same --split and --seed.
    const Split split = split_data(loaded.data, o.train.split, o.train.seed);
    if (o.part == "train") {
      data = align(split.train, features, classes);
    } else if (o.part == "test") {
      if (!split.test) throw ConfigError("--part test needs --split below 1");
      data = align(*split.test, features, classes);
    } else {
      throw ConfigError("unknown --part '" + o.part + "' (expected all, train or test)");
    }
  }
  const ClassMetrics m = class_metrics(predict_any(model, data), data.labels, classes.size());
  OutputDir dir(o.out_dir);
  Json metrics = metrics_json(m, classes);
  metrics["part"] = o.part;
  metrics["rows"] = data.n_rows;
  dir.write("eval.json", metrics.dump(2) + "\n");

  out << "accuracy " << fixed4(m.accuracy) << " on " << data.n_rows << " rows\n";
  out << "class,precision,recall,support\n";
  for (std::size_t c = 0; c < classes.size(); ++c) {
    out << classes[c] << "," << fixed4(m.precision[c]) << "," << fixed4(m.recall[c]) << "," << m.support[c] << "\n";
  }
  dir.write_manifest("eval",
                     {{"model", o.model_path}, {"dataset", data_json(loaded)}, {"part", o.part},
                      {"split", o.train.split}, {"seed", o.train.seed}},
                     start);
  return k_exit_ok;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const TrainConfig config = make_config(o.train);
  const LoadedData loaded = load_data(o.data);
  AnalysisReport report;
  report.feature_names = loaded.data.feature_names;

  if (!o.model_path.empty()) {
    // Activity of one trained tree on its training split.
    const DndtModel model = model_from_json(read_text_file(o.model_path));
    const Split split = split_data(loaded.data, o.train.split, o.train.seed);
    const Dataset train = align(split.train, model.feature_names, model.class_names);
    report.feature_names = model.feature_names;
    report.active = active_cutpoints(model, model.normalizer.apply(train));
    report.ignored = ignored_features(*report.active);
  } else {
    if (loaded.data.n_features > k_forest_feature_threshold) {
      throw ConfigError("repeated-run analysis trains single trees; select at most " +
                        std::to_string(k_forest_feature_threshold) + " features with --features");
    }
    RunProtocol protocol;
    protocol.n_runs = o.runs;
    protocol.train_fraction = o.train.split;
    const std::vector<RunResult> runs = repeated_runs(loaded.data, config, protocol);
    const DndtImportance imp = dndt_importance(runs, loaded.data.n_features);
    report.ignore_rate = imp.ignore_rate;
    report.dndt_ranking = imp.ranking;

    const Split split = split_data(loaded.data, o.train.split, o.train.seed);
    const CartTree cart = fit_cart(split.train);
    const GiniImportance gi = gini_importance(cart);
    report.cart_importance = gi.values;
    report.cart_ranking = rank_descending(gi.values);
    if (loaded.data.n_features >= 2) report.kendall_tau = kendall_tau(report.dndt_ranking, report.cart_ranking);
  }

  OutputDir dir(o.out_dir);
  dir.write("analysis.json", report.to_json());
  dir.write("features.csv", report.features_csv());
  out << report.features_csv();
  if (report.kendall_tau) out << "kendall_tau " << fixed4(*report.kendall_tau) << "\n";
  dir.write_manifest("analyze",
                     {{"config", config_json(o.train)}, {"dataset", data_json(loaded)}, {"seed", o.train.seed},
                      {"runs", o.runs}, {"model", o.model_path}},
                     start);
  return k_exit_ok;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const TrainConfig config = make_config(o.train);
  const LoadedData loaded = load_data(o.data);
  RunProtocol protocol;
  protocol.n_runs = o.runs;
  protocol.train_fraction = o.train.split;
  AnalysisReport report;
  report.feature_names = loaded.data.feature_names;
  report.sweep = cutpoint_sweep(loaded.data, config, o.counts, protocol);

  OutputDir dir(o.out_dir);
  dir.write("sweep.csv", report.sweep_csv());
  dir.write("sweep.json", report.to_json());
  out << report.sweep_csv();
  dir.write_manifest("sweep",
                     {{"config", config_json(o.train)}, {"dataset", data_json(loaded)}, {"seed", o.train.seed},
                      {"runs", o.runs}, {"counts", o.counts}},
                     start);
  return k_exit_ok;
}

int cmd_compare(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const TrainConfig config = make_config(o.train);
  const LoadedData loaded = load_data(o.data);
  const Split split = split_data(loaded.data, o.train.split, o.train.seed);

  std::string csv = "model,train_acc,test_acc\n";
  auto row = [&](const std::string& name, std::span<const std::size_t> train_pred,
                 const std::optional<std::vector<std::size_t>>& test_pred) {
    csv += name + "," + fmt(accuracy(train_pred, split.train.labels)) + ",";
    if (test_pred) csv += fmt(accuracy(*test_pred, split.test->labels));
    csv += "\n";
  };
  auto test_of = [&](auto&& predict) -> std::optional<std::vector<std::size_t>> {
    if (!split.test) return std::nullopt;
    return predict(*split.test);
  };

  if (wants_forest(o.train, loaded.data.n_features)) {
    const std::size_t n_trees = o.train.trees ? o.train.trees : k_default_forest_trees;
    const ForestModel forest = fit_forest(split.train, config, n_trees, o.train.subset);
    row("dndt-forest", predict_forest(split.train, forest),
        test_of([&](const Dataset& d) { return predict_forest(d, forest); }));
  } else {
    const DndtModel model = fit(split.train, config).model;
    row("dndt", predict_raw(split.train, model), test_of([&](const Dataset& d) { return predict_raw(d, model); }));
  }
  const CartTree cart = fit_cart(split.train, o.max_depth);
  row("cart", predict_cart(split.train, cart), test_of([&](const Dataset& d) { return predict_cart(d, cart); }));

  OutputDir dir(o.out_dir);
  dir.write("compare.csv", csv);
  out << csv;
  Json body{{"config", config_json(o.train)}, {"dataset", data_json(loaded)}, {"seed", o.train.seed}};
  if (o.max_depth) body["cart_max_depth"] = *o.max_depth;
  dir.write_manifest("compare", body, start);
  return k_exit_ok;
}

int cmd_export(const Options& o, std::ostream& out) {
  const AnyModel model = any_model_from_json(read_text_file(o.model_path));
  std::string dot;
  if (const auto* cart = std::get_if<CartTree>(&model)) {
    dot = to_dot(*cart);
  } else {
    DndtModel tree;
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
      if (o.tree_index >= forest->n_trees()) {
        throw ConfigError("--tree " + std::to_string(o.tree_index) + " out of range for a forest of " +
                          std::to_string(forest->n_trees()));
      }
      tree = forest->trees[o.tree_index].model;
    } else {
      tree = std::get<DndtModel>(model);
    }
    Dataset counts;
    counts.n_features = tree.n_features();
    counts.feature_names = tree.feature_names;
    counts.class_names = tree.class_names;
    if (!o.data.dataset.empty() || !o.data.csv.empty()) {
      counts = align(load_data(o.data).data, tree.feature_names, tree.class_names);
    }
    dot = to_dot(to_tree_view(tree, counts));
  }
  if (o.output_file.empty()) {
    out << dot;
  } else {
    write_text_file(o.output_file, dot);
  }
  return k_exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep neural decision trees: train, evaluate, analyze and export"};
  app.name("dndt");
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "train a tree (or a random-subspace forest on wide data)");
  add_data_flags(train, o.data, true);
  add_train_flags(train, o.train);
  add_out_flag(train, o);

  auto* eval = app.add_subcommand("eval", "accuracy and per-class metrics of a saved model");
  eval->add_option("--model", o.model_path, "model, forest or cart JSON")->required();
  add_data_flags(eval, o.data, true);
  eval->add_option("--part", o.part, "rows to score: all, train or test")->capture_default_str();
  eval->add_option("--split", o.train.split, "training fraction used by train")->capture_default_str();
  eval->add_option("--seed", o.train.seed, "seed used by train")->capture_default_str();
  add_out_flag(eval, o);

  auto* analyze = app.add_subcommand("analyze", "ignore rates, importance rankings and Kendall's tau");
  add_data_flags(analyze, o.data, true);
  add_train_flags(analyze, o.train);
  analyze->add_option("--runs", o.runs, "seeded training runs")->capture_default_str();
  analyze->add_option("--model", o.model_path, "report active cut points of this model instead");
  add_out_flag(analyze, o);

  auto* sweep = app.add_subcommand("sweep", "utilization and accuracy against cut points per feature");
  add_data_flags(sweep, o.data, true);
  add_train_flags(sweep, o.train);
  sweep->add_option("--runs", o.runs, "seeded runs per point")->capture_default_str();
  sweep->add_option("--counts", o.counts, "cut point counts")->delimiter(',')->capture_default_str();
  add_out_flag(sweep, o);

  auto* compare = app.add_subcommand("compare", "DNDT against the CART baseline on one split");
  add_data_flags(compare, o.data, true);
  add_train_flags(compare, o.train);
  compare->add_option("--max-depth", o.max_depth, "CART depth limit");
  add_out_flag(compare, o);

  auto* exp = app.add_subcommand("export", "Graphviz DOT of a saved model");
  exp->add_option("--model", o.model_path, "model, forest or cart JSON")->required();
  exp->add_flag("--dot", "DOT output (the only format)");
  exp->add_option("--tree", o.tree_index, "forest member to export")->capture_default_str();
  exp->add_option("-o,--output", o.output_file, "write to a file instead of stdout");
  add_data_flags(exp, o.data, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? k_exit_ok : k_exit_usage;
  }

  try {
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    if (*analyze) return cmd_analyze(o, out);
    if (*sweep) return cmd_sweep(o, out);
    if (*compare) return cmd_compare(o, out);
    if (*exp) return cmd_export(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return k_exit_usage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return k_exit_data;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return k_exit_data;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return k_exit_numeric;
  }
  return k_exit_usage;
}

}  // namespace dndt
