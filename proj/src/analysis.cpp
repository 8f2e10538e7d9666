#include "dndt/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <numeric>

#include <json.hpp>

#include "dndt/errors.hpp"

namespace dndt {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Inversions of `v` by merge sort; v is left sorted.
std::uint64_t count_inversions(std::vector<std::size_t>& v, std::vector<std::size_t>& scratch, std::size_t lo,
                               std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

std::vector<std::size_t> positions(std::span<const std::size_t> ranking) {
  std::vector<std::size_t> pos(ranking.size(), ranking.size());
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    const std::size_t item = ranking[i];
    if (item >= ranking.size() || pos[item] != ranking.size()) {
      throw ConfigError("kendall_tau: rankings must be permutations of 0..n-1");
    }
    pos[item] = i;
  }
  return pos;
}

}  // namespace

std::size_t ActiveCutpoints::total_active() const { return std::accumulate(active.begin(), active.end(), std::size_t{0}); }
std::size_t ActiveCutpoints::total_cutpoints() const { return std::accumulate(total.begin(), total.end(), std::size_t{0}); }
double ActiveCutpoints::overall_fraction() const {
  const std::size_t n = total_cutpoints();
  return n ? static_cast<double>(total_active()) / static_cast<double>(n) : 0.0;
}

ActiveCutpoints active_cutpoints(const DndtModel& model, const Dataset& normalized) {
  if (normalized.n_rows == 0) throw DataError(DataError::Kind::Empty, "active_cutpoints: dataset is empty");
  if (normalized.n_features != model.n_features()) {
    throw ShapeError("active_cutpoints: dataset has " + std::to_string(normalized.n_features) + " features, model " +
                     std::to_string(model.n_features()));
  }
  ActiveCutpoints out;
  for (std::size_t d = 0; d < model.n_features(); ++d) {
    const std::vector<double> col = normalized.column(d);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    std::size_t active = 0;
    for (double b : prepare_cutpoints(model.binners[d].cutpoints)) {
      if (*lo < b && *hi >= b) ++active;
    }
    const std::size_t total = model.binners[d].n_cutpoints();
    out.active.push_back(active);
    out.total.push_back(total);
    out.fraction.push_back(static_cast<double>(active) / static_cast<double>(total));
  }
  return out;
}

std::vector<bool> ignored_features(const ActiveCutpoints& active) {
  std::vector<bool> out;
  for (std::size_t a : active.active) out.push_back(a == 0);
  return out;
}

std::vector<bool> ignored_features(const DndtModel& model, const Dataset& normalized) {
  return ignored_features(active_cutpoints(model, normalized));
}

std::vector<RunResult> repeated_runs(const Dataset& data, const TrainConfig& config, const RunProtocol& protocol) {
  if (protocol.n_runs == 0) throw ConfigError("at least one run is required");
  config.validate();
  std::vector<RunResult> results(protocol.n_runs);
  std::vector<std::exception_ptr> errors(protocol.n_runs);
  const auto count = static_cast<std::int64_t>(protocol.n_runs);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto r = static_cast<std::size_t>(i);
    try {
      RunResult& out = results[r];
      out.seed = config.seed + r;
      const SplitIndices split = stratified_split(data, protocol.train_fraction, out.seed);
      const Dataset train = subset_rows(data, split.train);
      const Dataset test = subset_rows(data, split.test);
      TrainConfig run_config = config;
      run_config.seed = out.seed;
      const FitResult fitted = fit(train, run_config);
      const Dataset normalized_train = fitted.model.normalizer.apply(train);
      out.train_accuracy = accuracy(predict_batch(normalized_train, fitted.model), train.labels);
      out.test_accuracy = accuracy(predict_raw(test, fitted.model), test.labels);
      out.active = active_cutpoints(fitted.model, normalized_train);
      out.ignored = ignored_features(out.active);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

DndtImportance dndt_importance(std::span<const RunResult> runs, std::size_t n_features) {
  if (runs.empty()) throw ConfigError("dndt_importance: no runs");
  DndtImportance out;
  out.ignore_rate.assign(n_features, 0.0);
  for (const RunResult& r : runs) {
    if (r.ignored.size() != n_features) throw ShapeError("dndt_importance: run has the wrong feature count");
    for (std::size_t d = 0; d < n_features; ++d) out.ignore_rate[d] += r.ignored[d] ? 1.0 : 0.0;
  }
  for (double& v : out.ignore_rate) v = 100.0 * v / static_cast<double>(runs.size());
  out.ranking.resize(n_features);
  std::iota(out.ranking.begin(), out.ranking.end(), std::size_t{0});
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return out.ignore_rate[a] < out.ignore_rate[b]; });
  return out;
}

DndtImportance dndt_importance(const Dataset& data, const TrainConfig& config, std::size_t n_runs) {
  RunProtocol protocol;
  protocol.n_runs = n_runs;
  return dndt_importance(repeated_runs(data, config, protocol), data.n_features);
}

std::vector<std::size_t> rank_descending(std::span<const double> importance) {
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  return order;
}

std::vector<std::size_t> cart_ranking(const CartTree& tree) { return rank_descending(gini_importance(tree).values); }

double kendall_tau(std::span<const std::size_t> rank_a, std::span<const std::size_t> rank_b) {
  if (rank_a.size() != rank_b.size()) {
    throw ConfigError("kendall_tau: rankings have different lengths (" + std::to_string(rank_a.size()) + " and " +
                      std::to_string(rank_b.size()) + ")");
  }
  const std::size_t n = rank_a.size();
  if (n < 2) throw ConfigError("kendall_tau: at least two items are required");
  const std::vector<std::size_t> pos_b = positions(rank_b);
  positions(rank_a);  // validation only
  // Walk the items in a's order; discordant pairs are inversions of their b positions.
  std::vector<std::size_t> seq(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = pos_b[rank_a[i]];
  std::vector<std::size_t> scratch(n);
  const std::uint64_t discordant = count_inversions(seq, scratch, 0, n);
  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t concordant = pairs - discordant;
  return (static_cast<double>(concordant) - static_cast<double>(discordant)) / static_cast<double>(pairs);
}

std::vector<SweepPoint> cutpoint_sweep(const Dataset& data, const TrainConfig& config,
                                       std::span<const std::size_t> counts, const RunProtocol& protocol) {
  std::vector<SweepPoint> out;
  for (std::size_t n : counts) {
    TrainConfig c = config;
    c.cutpoints_per_feature = n;
    const std::vector<RunResult> runs = repeated_runs(data, c, protocol);
    SweepPoint p;
    p.cutpoints = n;
    for (const RunResult& r : runs) {
      p.mean_active_fraction += r.active.overall_fraction();
      p.mean_train_accuracy += r.train_accuracy;
      p.mean_test_accuracy += r.test_accuracy;
    }
    const double k = static_cast<double>(runs.size());
    p.mean_active_fraction /= k;
    p.mean_train_accuracy /= k;
    p.mean_test_accuracy /= k;
    out.push_back(p);
  }
  return out;
}

std::string AnalysisReport::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = feature_names;
  if (active) {
    j["active_cutpoints"] = {{"active", active->active}, {"total", active->total}, {"fraction", active->fraction}};
  }
  if (!ignored.empty()) j["ignored"] = ignored;
  if (!ignore_rate.empty()) j["ignore_rate_percent"] = ignore_rate;
  if (!dndt_ranking.empty()) j["dndt_ranking"] = dndt_ranking;
  if (!cart_importance.empty()) j["cart_importance"] = cart_importance;
  if (!cart_ranking.empty()) j["cart_ranking"] = cart_ranking;
  if (kendall_tau) j["kendall_tau"] = *kendall_tau;
  if (!sweep.empty()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const SweepPoint& p : sweep) {
      rows.push_back({{"cutpoints", p.cutpoints},
                      {"mean_active_fraction", p.mean_active_fraction},
                      {"mean_train_accuracy", p.mean_train_accuracy},
                      {"mean_test_accuracy", p.mean_test_accuracy}});
    }
    j["sweep"] = rows;
  }
  return j.dump(2) + "\n";
}

std::string AnalysisReport::features_csv() const {
  std::string out = "feature,name,active,total,active_fraction,ignored,ignore_rate,dndt_rank,cart_importance,cart_rank\n";
  auto rank_of = [](const std::vector<std::size_t>& ranking, std::size_t d) -> std::string {
    for (std::size_t i = 0; i < ranking.size(); ++i)
      if (ranking[i] == d) return std::to_string(i + 1);
    return "";
  };
  for (std::size_t d = 0; d < feature_names.size(); ++d) {
    out += std::to_string(d) + "," + feature_names[d] + ",";
    if (active) {
      out += std::to_string(active->active[d]) + "," + std::to_string(active->total[d]) + "," + fmt(active->fraction[d]);
    } else {
      out += ",,";
    }
    out += ",";
    if (d < ignored.size()) out += ignored[d] ? "1" : "0";
    out += ",";
    if (d < ignore_rate.size()) out += fmt(ignore_rate[d]);
    out += "," + rank_of(dndt_ranking, d) + ",";
    if (d < cart_importance.size()) out += fmt(cart_importance[d]);
    out += "," + rank_of(cart_ranking, d) + "\n";
  }
  return out;
}

std::string AnalysisReport::sweep_csv() const {
  std::string out = "cutpoints,mean_active_fraction,mean_train_acc,mean_test_acc\n";
  for (const SweepPoint& p : sweep) {
    out += std::to_string(p.cutpoints) + "," + fmt(p.mean_active_fraction) + "," + fmt(p.mean_train_accuracy) + "," +
           fmt(p.mean_test_accuracy) + "\n";
  }
  return out;
}

}  // namespace dndt
