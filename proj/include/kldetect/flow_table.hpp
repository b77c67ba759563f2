#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kldetect/csv.hpp"
#include "kldetect/error.hpp"
#include "kldetect/rng.hpp"

namespace kldetect {

/// Columnar numeric feature matrix with encoded labels. Immutable after
/// construction; every pipeline stage produces a new table.
class FlowTable {
 public:
  FlowTable() = default;

  FlowTable(std::vector<std::string> feature_names, std::vector<double> features,
            std::vector<int> labels)
      : feature_names_(std::move(feature_names)),
        features_(std::move(features)),
        labels_(std::move(labels)) {
    n_rows_ = labels_.size();
    n_features_ = feature_names_.size();
    require(features_.size() == n_rows_ * n_features_, ErrorCode::DimensionMismatch,
            "feature matrix size does not match rows x features");
    for (double v : features_) {
      require(std::isfinite(v), ErrorCode::NonFiniteData,
              "FlowTable requires finite features; sanitize the data first");
    }
    for (int y : labels_) {
      require(y == 0 || y == 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
    std::unordered_map<std::string, int> seen;
    for (const auto& name : feature_names_) {
      require(seen.emplace(name, 1).second, ErrorCode::InvalidArgument,
              "duplicate feature name: " + name);
    }
  }

  size_t n_rows() const { return n_rows_; }
  size_t n_features() const { return n_features_; }
  bool empty() const { return n_rows_ == 0; }

  double at(size_t row, size_t col) const { return features_[row * n_features_ + col]; }

  std::span<const double> row(size_t r) const {
    return {features_.data() + r * n_features_, n_features_};
  }

  const std::vector<double>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::array<size_t, 2> class_counts() const {
    std::array<size_t, 2> counts{0, 0};
    for (int y : labels_) ++counts[static_cast<size_t>(y)];
    return counts;
  }

  std::vector<double> column(size_t col) const {
    std::vector<double> out(n_rows_);
    for (size_t r = 0; r < n_rows_; ++r) out[r] = at(r, col);
    return out;
  }

  FlowTable subset_rows(std::span<const size_t> rows) const {
    std::vector<double> feats;
    feats.reserve(rows.size() * n_features_);
    std::vector<int> labs;
    labs.reserve(rows.size());
    for (size_t r : rows) {
      require(r < n_rows_, ErrorCode::IndexOutOfRange, "row index out of range");
      auto rv = row(r);
      feats.insert(feats.end(), rv.begin(), rv.end());
      labs.push_back(labels_[r]);
    }
    return FlowTable(feature_names_, std::move(feats), std::move(labs));
  }

  FlowTable subset_columns(const std::vector<size_t>& cols) const {
    std::vector<std::string> names;
    names.reserve(cols.size());
    for (size_t c : cols) {
      require(c < n_features_, ErrorCode::IndexOutOfRange, "column index out of range");
      names.push_back(feature_names_[c]);
    }
    std::vector<double> feats;
    feats.reserve(n_rows_ * cols.size());
    for (size_t r = 0; r < n_rows_; ++r) {
      for (size_t c : cols) feats.push_back(at(r, c));
    }
    return FlowTable(std::move(names), std::move(feats), labels_);
  }

  // FNV-1a over the raw double bits plus the label; used by the
  // disjoint/exhaustive split checks
  uint64_t row_hash(size_t r) const {
    uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&h](const void* data, size_t len) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
      }
    };
    auto rv = row(r);
    mix(rv.data(), rv.size() * sizeof(double));
    int y = labels_[r];
    mix(&y, sizeof(y));
    return h;
  }

 private:
  std::vector<std::string> feature_names_;
  std::vector<double> features_;  // row-major n_rows x n_features
  std::vector<int> labels_;
  size_t n_rows_ = 0;
  size_t n_features_ = 0;
};

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
};

struct SplitSpec {
  double train_fraction = 0.8;
  uint64_t seed = 0;
  bool stratified = true;
};

struct LoadOptions {
  std::vector<std::string> drop_columns = {"Unnamed: 0", "Flow ID", "Timestamp",
                                           "Source IP", "Destination IP"};
  std::string label_column = "Class";
};

// counts of replacements made by the sanitize pass
struct SanitizeStats {
  size_t pos_infinity = 0;
  size_t neg_infinity = 0;
  size_t missing = 0;  // NaN or unparseable cells
  std::vector<std::string> all_missing_columns;
  std::unordered_map<std::string, int> label_encoding;
};

namespace detail {

// Sanitize policy: +inf -> column finite max, -inf -> column finite min,
// NaN -> column median of finite entries. Columns with no finite entry
// are zero-filled and reported.
inline void sanitize_columns(std::vector<double>& features, size_t n_rows, size_t n_features,
                             const std::vector<std::string>& names, SanitizeStats& stats) {
  std::vector<double> finite;
  for (size_t c = 0; c < n_features; ++c) {
    finite.clear();
    for (size_t r = 0; r < n_rows; ++r) {
      double v = features[r * n_features + c];
      if (std::isfinite(v)) finite.push_back(v);
    }
    double col_min = 0.0, col_max = 0.0, col_median = 0.0;
    if (finite.empty()) {
      stats.all_missing_columns.push_back(names[c]);
    } else {
      auto [mn, mx] = std::minmax_element(finite.begin(), finite.end());
      col_min = *mn;
      col_max = *mx;
      size_t mid = finite.size() / 2;
      std::nth_element(finite.begin(), finite.begin() + mid, finite.end());
      col_median = finite[mid];
      if (finite.size() % 2 == 0) {
        double lower = *std::max_element(finite.begin(), finite.begin() + mid);
        col_median = 0.5 * (lower + col_median);
      }
    }
    for (size_t r = 0; r < n_rows; ++r) {
      double& v = features[r * n_features + c];
      if (std::isfinite(v)) continue;
      if (std::isnan(v)) {
        v = col_median;
        ++stats.missing;
      } else if (v > 0.0) {
        v = col_max;
        ++stats.pos_infinity;
      } else {
        v = col_min;
        ++stats.neg_infinity;
      }
    }
  }
}

// benign -> 0, keylogger -> 1 whenever those names appear, so that
// "positive" always means keylogger; otherwise sorted order
inline std::unordered_map<std::string, int> encode_labels(const std::vector<std::string>& raw) {
  std::vector<std::string> distinct;
  for (const auto& s : raw) {
    if (std::find(distinct.begin(), distinct.end(), s) == distinct.end()) distinct.push_back(s);
  }
  require(!distinct.empty(), ErrorCode::EmptyFile, "no label values found");
  require(distinct.size() <= 2, ErrorCode::TooManyClasses,
          "binary labels expected, found " + std::to_string(distinct.size()) + " classes");
  std::unordered_map<std::string, int> mapping;
  auto norm = [](const std::string& s) { return normalize_column_name(s); };
  if (distinct.size() == 1) {
    std::string n = norm(distinct[0]);
    mapping[distinct[0]] = (n == "keylogger" || n == "1") ? 1 : 0;
    return mapping;
  }
  for (const auto& s : distinct) {
    std::string n = norm(s);
    if (n == "benign" || n == "0") mapping[s] = 0;
    if (n == "keylogger" || n == "1") mapping[s] = 1;
  }
  if (mapping.size() != 2) {
    mapping.clear();
    std::sort(distinct.begin(), distinct.end());
    mapping[distinct[0]] = 0;
    mapping[distinct[1]] = 1;
  }
  return mapping;
}

}  // namespace detail

inline FlowTable load_csv_stream(std::istream& in, const LoadOptions& options,
                                 SanitizeStats* stats_out = nullptr) {
  CsvReader reader(in);
  std::vector<std::string> header;
  require(reader.next_record(header), ErrorCode::EmptyFile, "input has no header row");

  std::vector<std::string> normalized_drops;
  for (const auto& d : options.drop_columns) normalized_drops.push_back(normalize_column_name(d));
  const std::string label_key = normalize_column_name(options.label_column);

  size_t label_col = header.size();
  std::vector<size_t> keep_cols;
  std::vector<std::string> feature_names;
  for (size_t c = 0; c < header.size(); ++c) {
    std::string key = normalize_column_name(header[c]);
    if (key == label_key) {
      label_col = c;
      continue;
    }
    if (std::find(normalized_drops.begin(), normalized_drops.end(), key) !=
        normalized_drops.end()) {
      continue;
    }
    keep_cols.push_back(c);
    feature_names.push_back(trim(header[c]));
  }
  require(label_col < header.size(), ErrorCode::MissingLabelColumn,
          "label column '" + options.label_column + "' not found in header");

  std::vector<double> features;
  std::vector<std::string> raw_labels;
  std::vector<std::string> record;
  size_t row_index = 0;
  while (reader.next_record(record)) {
    if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
    if (record.size() != header.size()) {
      fail(ErrorCode::MalformedRow,
           "row " + std::to_string(row_index) + " has " + std::to_string(record.size()) +
               " fields, expected " + std::to_string(header.size()) + " (column " +
               std::to_string(std::min(record.size(), header.size())) + ")");
    }
    for (size_t c : keep_cols) features.push_back(parse_cell(record[c]));
    raw_labels.push_back(trim(record[label_col]));
    ++row_index;
  }
  require(row_index > 0, ErrorCode::EmptyFile, "input has a header but no data rows");

  SanitizeStats stats;
  detail::sanitize_columns(features, row_index, feature_names.size(), feature_names, stats);
  stats.label_encoding = detail::encode_labels(raw_labels);
  std::vector<int> labels;
  labels.reserve(raw_labels.size());
  for (const auto& s : raw_labels) labels.push_back(stats.label_encoding.at(s));
  if (stats_out) *stats_out = stats;
  return FlowTable(std::move(feature_names), std::move(features), std::move(labels));
}

inline FlowTable load_csv(const std::string& path, const LoadOptions& options = {},
                          SanitizeStats* stats_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  return load_csv_stream(in, options, stats_out);
}

inline ScalerParams fit_minmax(const FlowTable& table) {
  require(!table.empty(), ErrorCode::EmptyTable, "fit_minmax on empty table");
  ScalerParams params;
  params.min.assign(table.n_features(), 0.0);
  params.max.assign(table.n_features(), 0.0);
  for (size_t c = 0; c < table.n_features(); ++c) {
    double mn = table.at(0, c);
    double mx = mn;
    for (size_t r = 1; r < table.n_rows(); ++r) {
      mn = std::min(mn, table.at(r, c));
      mx = std::max(mx, table.at(r, c));
    }
    params.min[c] = mn;
    params.max[c] = mx;
  }
  return params;
}

// x -> (x - min) / (max - min), clamped to [0,1]. Degenerate features
// (max == min) map to 0.
inline FlowTable apply_minmax(const FlowTable& table, const ScalerParams& params) {
  require(params.min.size() == table.n_features() && params.max.size() == table.n_features(),
          ErrorCode::DimensionMismatch, "scaler fitted on a different feature count");
  std::vector<double> scaled;
  scaled.reserve(table.n_rows() * table.n_features());
  for (size_t r = 0; r < table.n_rows(); ++r) {
    for (size_t c = 0; c < table.n_features(); ++c) {
      double range = params.max[c] - params.min[c];
      double v = range > 0.0 ? (table.at(r, c) - params.min[c]) / range : 0.0;
      scaled.push_back(std::clamp(v, 0.0, 1.0));
    }
  }
  return FlowTable(table.feature_names(), std::move(scaled), table.labels());
}

namespace detail {

// rows ordered by a per-index hash key; deterministic in (seed, index)
// and independent of any OS or library shuffle
inline std::vector<size_t> hash_ordered(const std::vector<size_t>& rows, uint64_t seed) {
  std::vector<std::pair<uint64_t, size_t>> keyed;
  keyed.reserve(rows.size());
  for (size_t r : rows) keyed.emplace_back(index_hash(seed, r), r);
  std::sort(keyed.begin(), keyed.end());
  std::vector<size_t> out;
  out.reserve(rows.size());
  for (const auto& [k, r] : keyed) out.push_back(r);
  return out;
}

}  // namespace detail

inline std::pair<FlowTable, FlowTable> train_test_split(const FlowTable& table,
                                                        const SplitSpec& spec) {
  require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0, ErrorCode::InvalidArgument,
          "train_fraction must lie in (0,1)");
  require(table.n_rows() >= 2, ErrorCode::InsufficientRows, "need at least 2 rows to split");

  std::vector<size_t> train_rows;
  std::vector<size_t> test_rows;
  if (spec.stratified) {
    auto counts = table.class_counts();
    for (int cls = 0; cls < 2; ++cls) {
      size_t n_c = counts[static_cast<size_t>(cls)];
      if (n_c == 0) continue;
      require(n_c >= 2, ErrorCode::InsufficientRows,
              "stratified split needs >= 2 rows per class, class " + std::to_string(cls) +
                  " has " + std::to_string(n_c));
      std::vector<size_t> rows;
      for (size_t r = 0; r < table.n_rows(); ++r) {
        if (table.labels()[r] == cls) rows.push_back(r);
      }
      auto ordered = detail::hash_ordered(rows, spec.seed);
      auto n_train = static_cast<size_t>(std::llround(spec.train_fraction * double(n_c)));
      n_train = std::clamp<size_t>(n_train, 1, n_c - 1);
      train_rows.insert(train_rows.end(), ordered.begin(), ordered.begin() + n_train);
      test_rows.insert(test_rows.end(), ordered.begin() + n_train, ordered.end());
    }
  } else {
    std::vector<size_t> rows(table.n_rows());
    std::iota(rows.begin(), rows.end(), size_t{0});
    auto ordered = detail::hash_ordered(rows, spec.seed);
    auto n_train = static_cast<size_t>(std::llround(spec.train_fraction * double(rows.size())));
    n_train = std::clamp<size_t>(n_train, 1, rows.size() - 1);
    train_rows.assign(ordered.begin(), ordered.begin() + n_train);
    test_rows.assign(ordered.begin() + n_train, ordered.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {table.subset_rows(train_rows), table.subset_rows(test_rows)};
}

// proportional per-class subsample, hash-ordered for determinism
inline FlowTable stratified_subsample(const FlowTable& table, size_t max_rows, uint64_t seed) {
  if (table.n_rows() <= max_rows) return table;
  auto counts = table.class_counts();
  std::vector<size_t> keep;
  for (int cls = 0; cls < 2; ++cls) {
    size_t n_c = counts[static_cast<size_t>(cls)];
    if (n_c == 0) continue;
    auto want = static_cast<size_t>(
        std::llround(double(max_rows) * double(n_c) / double(table.n_rows())));
    want = std::clamp<size_t>(want, 1, n_c);
    std::vector<size_t> rows;
    for (size_t r = 0; r < table.n_rows(); ++r) {
      if (table.labels()[r] == cls) rows.push_back(r);
    }
    auto ordered = detail::hash_ordered(rows, seed);
    keep.insert(keep.end(), ordered.begin(), ordered.begin() + want);
  }
  std::sort(keep.begin(), keep.end());
  return table.subset_rows(keep);
}

// Stratified k-fold assignment: within each class, rows are hash-ordered
// then dealt round-robin, so folds are balanced within +/-1 per class.
inline std::vector<int> make_stratified_folds(const std::vector<int>& labels, int k,
                                              uint64_t seed) {
  require(k >= 2, ErrorCode::FoldTooSmall, "need k >= 2 folds");
  std::vector<int> fold_of(labels.size(), -1);
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<size_t> rows;
    for (size_t r = 0; r < labels.size(); ++r) {
      if (labels[r] == cls) rows.push_back(r);
    }
    if (rows.empty()) continue;
    require(rows.size() >= static_cast<size_t>(k), ErrorCode::FoldTooSmall,
            "class " + std::to_string(cls) + " has fewer rows than folds");
    auto ordered = detail::hash_ordered(rows, seed ^ (0x51ED270B * (cls + 1)));
    for (size_t i = 0; i < ordered.size(); ++i) {
      fold_of[ordered[i]] = static_cast<int>(i % static_cast<size_t>(k));
    }
  }
  return fold_of;
}

// --- binary cache -------------------------------------------------------
// Little-endian container that round-trips doubles bit-exactly.

inline void save_cache(const FlowTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError, "cannot open " + path + " for writing");
  const char magic[8] = {'K', 'L', 'D', 'T', 'B', 'L', '0', '1'};
  out.write(magic, 8);
  auto write_u64 = [&out](uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  write_u64(table.n_rows());
  write_u64(table.n_features());
  for (const auto& name : table.feature_names()) {
    write_u64(name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  out.write(reinterpret_cast<const char*>(table.features().data()),
            static_cast<std::streamsize>(table.features().size() * sizeof(double)));
  for (int y : table.labels()) {
    auto b = static_cast<unsigned char>(y);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
  require(out.good(), ErrorCode::IoError, "short write to " + path);
}

inline FlowTable load_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, "KLDTBL01", 8) == 0, ErrorCode::ParseError,
          path + " is not a kldetect table cache");
  auto read_u64 = [&in]() {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  };
  uint64_t n_rows = read_u64();
  uint64_t n_features = read_u64();
  std::vector<std::string> names(n_features);
  for (auto& name : names) {
    uint64_t len = read_u64();
    name.resize(len);
    in.read(name.data(), static_cast<std::streamsize>(len));
  }
  std::vector<double> features(n_rows * n_features);
  in.read(reinterpret_cast<char*>(features.data()),
          static_cast<std::streamsize>(features.size() * sizeof(double)));
  std::vector<int> labels(n_rows);
  for (auto& y : labels) {
    unsigned char b = 0;
    in.read(reinterpret_cast<char*>(&b), 1);
    y = b;
  }
  require(in.good(), ErrorCode::ParseError, "truncated cache file " + path);
  return FlowTable(std::move(names), std::move(features), std::move(labels));
}

}  // namespace kldetect
