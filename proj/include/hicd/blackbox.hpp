#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hicd/bitset.hpp"
#include "hicd/data.hpp"
#include "json.hpp"

namespace hicd {

/// The complex component of a hybrid model. Predictions are pure functions of the dataset rows.
class Predictor {
 public:
  virtual ~Predictor() = default;
  /// One label per position of `rows`.
  virtual Bitset predict(const BinaryDataset& ds, std::span<const std::size_t> rows) const = 0;
  virtual nlohmann::json to_json() const = 0;
  virtual std::string kind() const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

class ConstantPredictor final : public Predictor {
 public:
  explicit ConstantPredictor(bool label) : label_(label) {}
  Bitset predict(const BinaryDataset&, std::span<const std::size_t> rows) const override {
    return Bitset(rows.size(), label_);
  }
  nlohmann::json to_json() const override { return {{"kind", "constant"}, {"label", label_ ? 1 : 0}}; }
  std::string kind() const override { return "constant"; }
  bool label() const { return label_; }

 private:
  bool label_;
};

/// Replays stored predictions keyed by dataset index.
class IndexedPredictor final : public Predictor {
 public:
  IndexedPredictor(Bitset predictions, Bitset known) : predictions_(std::move(predictions)), known_(std::move(known)) {}
  explicit IndexedPredictor(Bitset predictions)
      : predictions_(std::move(predictions)), known_(predictions_.size(), true) {}

  Bitset predict(const BinaryDataset& ds, std::span<const std::size_t> rows) const override;
  nlohmann::json to_json() const override;
  std::string kind() const override { return "indexed"; }
  const Bitset& predictions() const { return predictions_; }

 private:
  Bitset predictions_;
  Bitset known_;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  std::size_t min_samples_split = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;     // feature == 0
  std::int32_t right = -1;    // feature == 1
  std::uint8_t label = 0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  bool predict(const BinaryDataset& ds, std::size_t row) const;
};

class RandomForest final : public Predictor {
 public:
  RandomForest(ForestConfig cfg, std::vector<std::string> feature_names, std::vector<DecisionTree> trees)
      : cfg_(cfg), feature_names_(std::move(feature_names)), trees_(std::move(trees)) {}

  Bitset predict(const BinaryDataset& ds, std::span<const std::size_t> rows) const override;
  nlohmann::json to_json() const override;
  std::string kind() const override { return "forest"; }

  const ForestConfig& config() const { return cfg_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  bool operator==(const RandomForest& o) const;

 private:
  ForestConfig cfg_;
  std::vector<std::string> feature_names_;
  std::vector<DecisionTree> trees_;
};

/// Grows one CART tree on a bootstrap of `sample` (Gini, sqrt(#features) candidates per split).
DecisionTree grow_tree(const BinaryDataset& ds, std::span<const std::size_t> sample, const ForestConfig& cfg,
                       std::size_t tree_index);

/// Trees are grown in parallel; tree t depends only on (sample, cfg, t), so the result equals
/// train_forest_serial. A single-label sample yields a ConstantPredictor.
PredictorPtr train_forest(const BinaryDataset& ds, std::span<const std::size_t> sample, const ForestConfig& cfg,
                          std::vector<std::string>* warnings = nullptr);
PredictorPtr train_forest_serial(const BinaryDataset& ds, std::span<const std::size_t> sample,
                                 const ForestConfig& cfg, std::vector<std::string>* warnings = nullptr);

/// CSV with columns (index, prediction) covering every index 0..n-1 exactly once.
PredictorPtr load_predictions(const std::filesystem::path& path, std::size_t n);

/// Fraction of positions where two fingerprints agree.
double agreement(const Bitset& a, const Bitset& b);

PredictorPtr predictor_from_json(const nlohmann::json& j);

}  // namespace hicd
