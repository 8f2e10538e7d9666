#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dndt {

// Tabular classification data. Values are stored row-major in their
// original units; Normalizer maps them onto [0, 1].
struct Dataset {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<double> values;  // n_rows x n_features
  std::vector<std::size_t> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<bool> categorical;
  // Ordinal code -> original level for categorical features, empty otherwise.
  std::vector<std::vector<std::string>> levels;

  std::size_t n_classes() const noexcept { return class_names.size(); }
  double at(std::size_t row, std::size_t feature) const { return values[row * n_features + feature]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_features, n_features}; }
  std::vector<double> column(std::size_t feature) const;

  // Throws DataError if the invariants do not hold.
  void validate() const;
};

// Per-feature min-max scaling fitted on one dataset (the training split).
struct Normalizer {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<bool> constant;  // max == min; such features map to 0.5

  static Normalizer fit(const Dataset& data);

  std::size_t n_features() const noexcept { return min.size(); }
  // Values outside the fitted range map outside [0, 1]; hard routing and
  // the tree view handle them consistently.
  double normalize(std::size_t feature, double value) const;
  double denormalize(std::size_t feature, double value) const;
  std::vector<double> normalize_row(std::span<const double> row) const;
  Dataset apply(const Dataset& data) const;
};

struct LoadOptions {
  // Column name or zero-based index; defaults to the last column.
  std::optional<std::string> label_column;
  // Columns forced to ordinal encoding. Non-numeric columns are always
  // encoded ordinally.
  std::vector<std::string> categorical;
  std::vector<std::string> missing_tokens = {"", "?", "NA", "NaN", "nan", "null"};
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;
  std::uint64_t fingerprint = 0;  // FNV-1a of the raw bytes
  std::string source;
};

LoadResult load_csv(const std::string& path, const LoadOptions& options = {});
LoadResult parse_csv(std::string_view text, const LoadOptions& options = {}, std::string source = "<memory>");

struct BundledCsv {
  std::string_view name;
  std::string_view text;
};

std::vector<std::string> bundled_dataset_names();
// "iris" or "haberman".
LoadResult load_bundled(std::string_view name, const LoadOptions& options = {});

std::uint64_t fnv1a(std::string_view bytes);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified by class, deterministic under seed. Every class needs at least
// two rows so both sides receive one.
SplitIndices stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed);

Dataset subset_rows(const Dataset& data, std::span<const std::size_t> rows);
Dataset select_features(const Dataset& data, std::span<const std::size_t> features);

namespace detail {
std::span<const BundledCsv> bundled_csvs();
}

}  // namespace dndt
