#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hicd/bitset.hpp"
#include "hicd/csv.hpp"

namespace hicd {

using IndexList = std::vector<std::size_t>;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Raw tabular input
// ---------------------------------------------------------------------------

struct RawColumn {
  std::string name;
  std::vector<std::string> text;                 // "" marks a missing value
  std::vector<std::optional<double>> numeric;    // parsed values; nullopt when missing/unparseable
  bool is_numeric = false;                       // every non-missing value parsed as a number
};

struct RawTable {
  std::string label_column;
  std::vector<RawColumn> columns;  // label column excluded
  std::vector<std::uint8_t> labels;
  std::size_t n_rows = 0;
  std::size_t dropped_missing_label = 0;

  const RawColumn& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// Duplicate header names get ".1", ".2", ... suffixes. Rows with a missing label are dropped.
RawTable load_csv(const std::filesystem::path& path, const std::string& label_column,
                  const std::string& positive_value);
RawTable table_from_csv(const csv::Table& table, const std::string& label_column,
                        const std::string& positive_value);

// ---------------------------------------------------------------------------
// Manifest and group specification
// ---------------------------------------------------------------------------

/// How one sensitive attribute is partitioned into protected groups.
struct GroupSpec {
  enum class Kind { Categories, Cuts, Quantiles };

  std::string name;    // attribute name used everywhere downstream, e.g. "Race"
  std::string column;  // source column
  Kind kind = Kind::Categories;

  // Categories: explicit keep-list, or the `top` most frequent values.
  std::vector<std::string> keep;
  std::size_t top = 0;
  bool other = true;  // merge the remaining values into "Other"

  // Cuts: left-closed right-open intervals (-inf,c1), [c1,c2), ..., [ck,inf).
  std::vector<double> cuts;
  std::vector<std::string> labels;

  // Quantiles: same interval semantics as feature binning.
  std::size_t quantile_bins = 3;
};

struct DatasetManifest {
  std::string name;
  std::filesystem::path csv_path;
  std::string label_column;
  std::string positive_value;
  std::vector<std::string> numeric_columns;
  std::vector<std::string> categorical_columns;
  std::vector<GroupSpec> sensitive;
  std::size_t n_bins = 3;

  /// Relative csv paths resolve against the manifest's directory.
  static DatasetManifest load(const std::filesystem::path& path);
};

// ---------------------------------------------------------------------------
// Binarized dataset
// ---------------------------------------------------------------------------

struct FeatureInfo {
  std::string name;    // "column:level"
  std::string column;
  std::string level;
};

/// Partition of {0..n-1} into named groups for one sensitive attribute.
struct GroupMap {
  std::string attribute;
  std::vector<std::string> names;
  std::vector<Bitset> members;
  std::vector<std::uint32_t> group_of;

  std::size_t size() const { return names.size(); }
};

class BinaryDataset {
 public:
  BinaryDataset() = default;
  BinaryDataset(std::string name, std::vector<FeatureInfo> features, std::vector<Bitset> bits, Bitset labels,
                std::vector<GroupMap> groups);

  const std::string& name() const { return name_; }
  std::size_t n() const { return labels_.size(); }
  std::size_t n_features() const { return features_.size(); }
  const std::vector<FeatureInfo>& features() const { return features_; }
  const Bitset& feature(std::size_t f) const { return bits_[f]; }
  const Bitset& labels() const { return labels_; }
  bool label(std::size_t i) const { return labels_.test(i); }
  const std::vector<GroupMap>& groups() const { return groups_; }

  std::optional<std::size_t> feature_index(const std::string& name) const;
  const GroupMap& group_map(const std::string& attribute) const;
  bool has_attribute(const std::string& attribute) const;

  std::vector<std::string> warnings;

 private:
  std::string name_;
  std::vector<FeatureInfo> features_;
  std::vector<Bitset> bits_;
  Bitset labels_;
  std::vector<GroupMap> groups_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Quantile edges with linear interpolation between order statistics.
double quantile(std::span<const double> sorted, double q);

/// Numeric columns become quantile-interval indicators (-inf,c1], (c1,c2], ..., (ck,inf); ties at an
/// edge fall in the lower bin. Categorical columns become one indicator per level. Missing values
/// become a "missing" level.
BinaryDataset binarize(const RawTable& table, const DatasetManifest& manifest);

/// Convenience: load + binarize.
BinaryDataset prepare_dataset(const DatasetManifest& manifest);

// ---------------------------------------------------------------------------
// Splits and resampling
// ---------------------------------------------------------------------------

struct SplitSpec {
  IndexList train;
  IndexList test;
  std::uint64_t seed = 0;
};

/// 80/20 shuffle split, |test| = max(1, floor(n/5)); both lists returned sorted.
SplitSpec split(const BinaryDataset& ds, std::uint64_t seed);

/// |indices| draws with replacement, deterministic in seed.
IndexList bootstrap_sample(const BinaryDataset& ds, std::span<const std::size_t> indices, std::uint64_t seed);

/// Stateless seed derivation (splitmix64 finalizer over a mixed key).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// ---------------------------------------------------------------------------
// Cache files
// ---------------------------------------------------------------------------

/// One compact JSON header line, then the packed little-endian bitset payload.
void save_dataset(const BinaryDataset& ds, const std::filesystem::path& path);
BinaryDataset load_dataset(const std::filesystem::path& path);

void save_split(const SplitSpec& s, const std::filesystem::path& path);
SplitSpec load_split(const std::filesystem::path& path);

}  // namespace hicd
