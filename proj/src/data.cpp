#include "dndt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "dndt/errors.hpp"

namespace dndt {
namespace {

using Kind = DataError::Kind;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// RFC-4180 records: quoted fields may contain commas, doubled quotes and
// line breaks. Blank lines are skipped.
std::vector<std::vector<std::string>> parse_records(std::string_view text, const std::string& source) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && trim(record[0]).empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !trim(field).empty()) {
          throw DataError(Kind::Parse, source + ":" + std::to_string(line) + ": stray quote inside unquoted field");
        }
        field.clear();
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw DataError(Kind::Parse, source + ": unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::size_t resolve_column(const std::vector<std::string>& header, const std::string& ref, const std::string& what) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == ref) return i;
  }
  if (const auto idx = parse_number(ref); idx && *idx >= 0 && std::floor(*idx) == *idx && *idx < static_cast<double>(header.size())) {
    return static_cast<std::size_t>(*idx);
  }
  throw DataError(Kind::Schema, what + " column '" + ref + "' not found in header");
}

}  // namespace

std::vector<double> Dataset::column(std::size_t feature) const {
  std::vector<double> out(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) out[i] = at(i, feature);
  return out;
}

void Dataset::validate() const {
  if (n_rows == 0) throw DataError(Kind::Empty, "dataset has no rows");
  if (n_features == 0) throw DataError(Kind::Schema, "dataset has no feature columns");
  if (values.size() != n_rows * n_features || labels.size() != n_rows || feature_names.size() != n_features) {
    throw DataError(Kind::Schema, "dataset arrays are inconsistent with its dimensions");
  }
  for (std::size_t y : labels) {
    if (y >= class_names.size()) throw DataError(Kind::Schema, "label " + std::to_string(y) + " out of range");
  }
}

Normalizer Normalizer::fit(const Dataset& data) {
  data.validate();
  Normalizer n;
  n.min.assign(data.n_features, 0.0);
  n.max.assign(data.n_features, 0.0);
  n.constant.assign(data.n_features, false);
  for (std::size_t d = 0; d < data.n_features; ++d) {
    double lo = data.at(0, d);
    double hi = lo;
    for (std::size_t i = 1; i < data.n_rows; ++i) {
      lo = std::min(lo, data.at(i, d));
      hi = std::max(hi, data.at(i, d));
    }
    n.min[d] = lo;
    n.max[d] = hi;
    n.constant[d] = !(hi > lo);
  }
  return n;
}

double Normalizer::normalize(std::size_t feature, double value) const {
  if (constant[feature]) return 0.5;
  return (value - min[feature]) / (max[feature] - min[feature]);
}

double Normalizer::denormalize(std::size_t feature, double value) const {
  return min[feature] + value * (max[feature] - min[feature]);
}

std::vector<double> Normalizer::normalize_row(std::span<const double> row) const {
  if (row.size() != n_features()) {
    throw ShapeError("normalize_row: expected " + std::to_string(n_features()) + " features, got " +
                     std::to_string(row.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t d = 0; d < row.size(); ++d) out[d] = normalize(d, row[d]);
  return out;
}

Dataset Normalizer::apply(const Dataset& data) const {
  if (data.n_features != n_features()) {
    throw ShapeError("normalizer: fitted on " + std::to_string(n_features()) + " features, dataset has " +
                     std::to_string(data.n_features));
  }
  Dataset out = data;
  for (std::size_t i = 0; i < data.n_rows; ++i)
    for (std::size_t d = 0; d < data.n_features; ++d) out.values[i * data.n_features + d] = normalize(d, data.at(i, d));
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

LoadResult parse_csv(std::string_view text, const LoadOptions& options, std::string source) {
  auto records = parse_records(text, source);
  if (records.empty()) throw DataError(Kind::Empty, source + ": file is empty");
  const std::vector<std::string> header = records.front();
  const std::size_t width = header.size();
  if (width < 2) throw DataError(Kind::Schema, source + ": need at least one feature column and a label column");

  const std::size_t label_col =
      options.label_column ? resolve_column(header, *options.label_column, "label") : width - 1;
  std::vector<bool> forced(width, false);
  for (const std::string& ref : options.categorical) forced[resolve_column(header, ref, "categorical")] = true;
  if (forced[label_col]) forced[label_col] = false;

  auto is_missing = [&](std::string_view v) {
    v = trim(v);
    return std::find(options.missing_tokens.begin(), options.missing_tokens.end(), v) != options.missing_tokens.end();
  };

  std::vector<std::vector<std::string>> rows;
  std::size_t dropped = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.size() != width) {
      throw DataError(Kind::Parse, source + ": record " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                                       " fields, header has " + std::to_string(width));
    }
    if (std::any_of(rec.begin(), rec.end(), is_missing)) {
      ++dropped;
      continue;
    }
    for (auto& f : rec) f = std::string(trim(f));
    rows.push_back(std::move(rec));
  }
  if (rows.empty()) throw DataError(Kind::Empty, source + ": no complete rows remain after dropping missing values");

  LoadResult result;
  result.dropped_rows = dropped;
  result.fingerprint = fnv1a(text);
  result.source = std::move(source);
  Dataset& ds = result.dataset;
  ds.n_rows = rows.size();
  ds.n_features = width - 1;
  ds.values.assign(ds.n_rows * ds.n_features, 0.0);

  std::size_t d = 0;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    ds.feature_names.emplace_back(trim(header[c]));
    bool categorical = forced[c];
    if (!categorical) {
      categorical = std::any_of(rows.begin(), rows.end(), [&](const auto& row) { return !parse_number(row[c]); });
    }
    ds.categorical.push_back(categorical);
    std::vector<std::string> levels;
    if (categorical) {
      std::map<std::string, std::size_t> code;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [it, inserted] = code.try_emplace(rows[i][c], levels.size());
        if (inserted) levels.push_back(rows[i][c]);
        ds.values[i * ds.n_features + d] = static_cast<double>(it->second);
      }
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) ds.values[i * ds.n_features + d] = *parse_number(rows[i][c]);
    }
    ds.levels.push_back(std::move(levels));
    ++d;
  }

  // Numeric labels are ordered numerically; anything else by first appearance.
  const bool numeric_labels =
      std::all_of(rows.begin(), rows.end(), [&](const auto& row) { return parse_number(row[label_col]).has_value(); });
  std::vector<std::string> names;
  for (const auto& row : rows) {
    if (std::find(names.begin(), names.end(), row[label_col]) == names.end()) names.push_back(row[label_col]);
  }
  if (numeric_labels) {
    std::stable_sort(names.begin(), names.end(),
                     [](const std::string& a, const std::string& b) { return *parse_number(a) < *parse_number(b); });
  }
  if (names.size() < 2) {
    throw DataError(Kind::SingleClass, result.source + ": label column '" + std::string(trim(header[label_col])) +
                                           "' has a single class");
  }
  std::map<std::string, std::size_t> label_code;
  for (std::size_t k = 0; k < names.size(); ++k) label_code[names[k]] = k;
  ds.labels.reserve(rows.size());
  for (const auto& row : rows) ds.labels.push_back(label_code.at(row[label_col]));
  ds.class_names = std::move(names);
  ds.validate();
  return result;
}

LoadResult load_csv(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(Kind::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options, path);
}

std::vector<std::string> bundled_dataset_names() {
  std::vector<std::string> names;
  for (const BundledCsv& b : detail::bundled_csvs()) names.emplace_back(b.name);
  return names;
}

LoadResult load_bundled(std::string_view name, const LoadOptions& options) {
  for (const BundledCsv& b : detail::bundled_csvs()) {
    if (b.name == name) return parse_csv(b.text, options, std::string(name));
  }
  throw DataError(Kind::Io, "unknown bundled dataset '" + std::string(name) + "'");
}

SplitIndices stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split: train fraction must lie in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < data.n_rows; ++i) by_class[data.labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  SplitIndices split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      throw DataError(Kind::Split, "split: class '" + data.class_names[c] + "' has a single instance");
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<double>(members.size());
    const auto take = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(train_fraction * n)), 1,
                                              members.size() - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset subset_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out = data;
  out.n_rows = rows.size();
  out.values.resize(rows.size() * data.n_features);
  out.labels.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = data.row(rows[k]);
    std::copy(src.begin(), src.end(), out.values.begin() + static_cast<std::ptrdiff_t>(k * data.n_features));
    out.labels[k] = data.labels[rows[k]];
  }
  return out;
}

Dataset select_features(const Dataset& data, std::span<const std::size_t> features) {
  Dataset out;
  out.n_rows = data.n_rows;
  out.n_features = features.size();
  out.labels = data.labels;
  out.class_names = data.class_names;
  out.values.resize(data.n_rows * features.size());
  for (std::size_t f : features) {
    if (f >= data.n_features) throw ConfigError("feature index " + std::to_string(f) + " out of range");
    out.feature_names.push_back(data.feature_names[f]);
    out.categorical.push_back(data.categorical[f]);
    out.levels.push_back(data.levels[f]);
  }
  for (std::size_t i = 0; i < data.n_rows; ++i)
    for (std::size_t k = 0; k < features.size(); ++k) out.values[i * features.size() + k] = data.at(i, features[k]);
  return out;
}

}  // namespace dndt
