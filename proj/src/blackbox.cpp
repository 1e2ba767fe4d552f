#include "hicd/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hicd/csv.hpp"

namespace hicd {

using nlohmann::json;

void ForestConfig::validate() const {
  if (n_trees < 1) throw std::invalid_argument("ForestConfig: n_trees must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("ForestConfig: max_depth must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("ForestConfig: min_samples_split must be >= 2");
}

Bitset IndexedPredictor::predict(const BinaryDataset&, std::span<const std::size_t> rows) const {
  Bitset out(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const std::size_t i = rows[p];
    if (i >= predictions_.size() || !known_.test(i)) {
      throw std::out_of_range("IndexedPredictor: no stored prediction for index " + std::to_string(i));
    }
    if (predictions_.test(i)) out.set(p);
  }
  return out;
}

json IndexedPredictor::to_json() const {
  json j{{"kind", "indexed"}, {"n", predictions_.size()}, {"predictions", predictions_.to_hex()}};
  if (known_.count() != known_.size()) j["known"] = known_.to_hex();
  return j;
}

bool DecisionTree::predict(const BinaryDataset& ds, std::size_t row) const {
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& nd = nodes[k];
    k = static_cast<std::size_t>(ds.feature(static_cast<std::size_t>(nd.feature)).test(row) ? nd.right : nd.left);
  }
  return nodes[k].label != 0;
}

Bitset RandomForest::predict(const BinaryDataset& ds, std::span<const std::size_t> rows) const {
  Bitset out(rows.size());
  const std::size_t nt = trees_.size();
  for (std::size_t p = 0; p < rows.size(); ++p) {
    std::size_t votes = 0;
    for (const auto& t : trees_) votes += t.predict(ds, rows[p]) ? 1 : 0;
    if (2 * votes >= nt) out.set(p);  // ties go to label 1
  }
  return out;
}

json RandomForest::to_json() const {
  json trees = json::array();
  for (const auto& t : trees_) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.left, n.right, n.label});
    trees.push_back(std::move(nodes));
  }
  return {{"kind", "forest"},
          {"version", 1},
          {"config",
           {{"n_trees", cfg_.n_trees},
            {"max_depth", cfg_.max_depth},
            {"min_samples_split", cfg_.min_samples_split},
            {"seed", cfg_.seed}}},
          {"features", feature_names_},
          {"trees", std::move(trees)}};
}

bool RandomForest::operator==(const RandomForest& o) const {
  if (trees_.size() != o.trees_.size() || feature_names_ != o.feature_names_) return false;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto& a = trees_[t].nodes;
    const auto& b = o.trees_[t].nodes;
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].feature != b[k].feature || a[k].left != b[k].left || a[k].right != b[k].right ||
          a[k].label != b[k].label)
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tree growing
// ---------------------------------------------------------------------------

namespace {

// Column-major byte image of the sample's features.
struct SampleMatrix {
  std::size_t m = 0;
  std::size_t nf = 0;
  std::vector<std::uint8_t> x;
  std::vector<std::uint8_t> y;

  SampleMatrix(const BinaryDataset& ds, std::span<const std::size_t> sample)
      : m(sample.size()), nf(ds.n_features()), x(m * nf), y(m) {
    for (std::size_t f = 0; f < nf; ++f) {
      const Bitset& b = ds.feature(f);
      std::uint8_t* col = x.data() + f * m;
      for (std::size_t p = 0; p < m; ++p) col[p] = b.test(sample[p]) ? 1 : 0;
    }
    for (std::size_t p = 0; p < m; ++p) y[p] = ds.label(sample[p]) ? 1 : 0;
  }
  std::uint8_t at(std::size_t f, std::size_t p) const { return x[f * m + p]; }
};

DecisionTree grow(const SampleMatrix& sm, const ForestConfig& cfg, std::size_t tree_index) {
  std::mt19937_64 rng(derive_seed(cfg.seed, tree_index, 0x7265ULL));
  std::uniform_int_distribution<std::size_t> draw(0, sm.m - 1);
  std::vector<std::uint32_t> rows(sm.m);
  for (auto& r : rows) r = static_cast<std::uint32_t>(draw(rng));

  const std::size_t mtry =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(sm.nf)))));
  std::vector<std::uint32_t> feats(sm.nf);
  std::iota(feats.begin(), feats.end(), 0U);

  DecisionTree tree;
  struct Task {
    std::size_t begin, end, depth;
    std::int32_t node;
  };
  tree.nodes.push_back({});
  std::vector<Task> stack{{0, rows.size(), 0, 0}};

  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    const std::size_t size = t.end - t.begin;
    std::size_t pos = 0;
    for (std::size_t k = t.begin; k < t.end; ++k) pos += sm.y[rows[k]];
    auto& node = tree.nodes[static_cast<std::size_t>(t.node)];
    node.label = 2 * pos >= size ? 1 : 0;
    if (size < cfg.min_samples_split || t.depth >= cfg.max_depth || pos == 0 || pos == size || sm.nf == 0) continue;

    // Draw candidate features without replacement; constant ones do not count toward mtry.
    std::int32_t best = -1;
    double best_score = -1.0;
    std::size_t evaluated = 0;
    for (std::size_t k = 0; k < sm.nf && evaluated < mtry; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, sm.nf - 1);
      std::swap(feats[k], feats[pick(rng)]);
      const std::uint32_t f = feats[k];
      std::size_t n1 = 0;
      std::size_t p1 = 0;
      for (std::size_t r = t.begin; r < t.end; ++r) {
        if (sm.at(f, rows[r])) {
          ++n1;
          p1 += sm.y[rows[r]];
        }
      }
      const std::size_t n0 = size - n1;
      if (n1 == 0 || n0 == 0) continue;
      ++evaluated;
      const std::size_t p0 = pos - p1;
      const double q1 = static_cast<double>(n1 - p1);
      const double q0 = static_cast<double>(n0 - p0);
      // Maximizing this is equivalent to minimizing the weighted Gini impurity.
      const double score = (static_cast<double>(p1) * static_cast<double>(p1) + q1 * q1) / static_cast<double>(n1) +
                           (static_cast<double>(p0) * static_cast<double>(p0) + q0 * q0) / static_cast<double>(n0);
      if (score > best_score) {
        best_score = score;
        best = static_cast<std::int32_t>(f);
      }
    }
    if (best < 0) continue;

    auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                     rows.begin() + static_cast<std::ptrdiff_t>(t.end),
                                     [&](std::uint32_t r) { return sm.at(static_cast<std::size_t>(best), r) == 0; });
    const std::size_t split = static_cast<std::size_t>(mid - rows.begin());
    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    const auto right = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    auto& parent = tree.nodes[static_cast<std::size_t>(t.node)];
    parent.feature = best;
    parent.left = left;
    parent.right = right;
    stack.push_back({split, t.end, t.depth + 1, right});
    stack.push_back({t.begin, split, t.depth + 1, left});
  }
  return tree;
}

std::vector<std::string> feature_names(const BinaryDataset& ds) {
  std::vector<std::string> names;
  for (const auto& f : ds.features()) names.push_back(f.name);
  return names;
}

PredictorPtr constant_if_single_label(const BinaryDataset& ds, std::span<const std::size_t> sample,
                                      std::vector<std::string>* warnings) {
  if (sample.empty()) throw std::invalid_argument("train_forest: empty training sample");
  std::size_t pos = 0;
  for (std::size_t i : sample) pos += ds.label(i) ? 1 : 0;
  if (pos == 0 || pos == sample.size()) {
    if (warnings) warnings->push_back("single-label training sample; using a constant predictor");
    return std::make_shared<ConstantPredictor>(pos != 0);
  }
  return nullptr;
}

}  // namespace

DecisionTree grow_tree(const BinaryDataset& ds, std::span<const std::size_t> sample, const ForestConfig& cfg,
                       std::size_t tree_index) {
  cfg.validate();
  if (sample.empty()) throw std::invalid_argument("grow_tree: empty sample");
  return grow(SampleMatrix(ds, sample), cfg, tree_index);
}

PredictorPtr train_forest(const BinaryDataset& ds, std::span<const std::size_t> sample, const ForestConfig& cfg,
                          std::vector<std::string>* warnings) {
  cfg.validate();
  if (auto c = constant_if_single_label(ds, sample, warnings)) return c;
  const SampleMatrix sm(ds, sample);
  std::vector<DecisionTree> trees(cfg.n_trees);
  const auto nt = static_cast<std::int64_t>(cfg.n_trees);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < nt; ++t) {
    trees[static_cast<std::size_t>(t)] = grow(sm, cfg, static_cast<std::size_t>(t));
  }
  return std::make_shared<RandomForest>(cfg, feature_names(ds), std::move(trees));
}

PredictorPtr train_forest_serial(const BinaryDataset& ds, std::span<const std::size_t> sample,
                                 const ForestConfig& cfg, std::vector<std::string>* warnings) {
  cfg.validate();
  if (auto c = constant_if_single_label(ds, sample, warnings)) return c;
  const SampleMatrix sm(ds, sample);
  std::vector<DecisionTree> trees;
  trees.reserve(cfg.n_trees);
  for (std::size_t t = 0; t < cfg.n_trees; ++t) trees.push_back(grow(sm, cfg, t));
  return std::make_shared<RandomForest>(cfg, feature_names(ds), std::move(trees));
}

// ---------------------------------------------------------------------------

PredictorPtr load_predictions(const std::filesystem::path& path, std::size_t n) {
  const csv::Table t = csv::read(path);
  if (t.header.size() != 2 || t.header[0] != "index" || t.header[1] != "prediction") {
    throw DataError("prediction file must have header 'index,prediction': " + path.string());
  }
  if (t.rows.size() != n) {
    throw DataError("prediction file has " + std::to_string(t.rows.size()) + " rows, expected " + std::to_string(n));
  }
  Bitset pred(n);
  Bitset seen(n);
  for (const auto& row : t.rows) {
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoull(row[0], &used);
      if (used != row[0].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DataError("prediction file: invalid index '" + row[0] + "'");
    }
    if (idx >= n) throw DataError("prediction file: index out of range: " + row[0]);
    if (seen.test(idx)) throw DataError("prediction file: duplicate index " + row[0]);
    if (row[1] != "0" && row[1] != "1") throw DataError("prediction file: non-binary value '" + row[1] + "'");
    seen.set(idx);
    if (row[1] == "1") pred.set(idx);
  }
  if (seen.count() != n) throw DataError("prediction file: missing index");
  return std::make_shared<IndexedPredictor>(std::move(pred));
}

double agreement(const Bitset& a, const Bitset& b) {
  if (a.size() != b.size()) throw std::invalid_argument("agreement: fingerprint length mismatch");
  if (a.size() == 0) return 1.0;
  const std::size_t differ = (a ^ b).count();
  return static_cast<double>(a.size() - differ) / static_cast<double>(a.size());
}

PredictorPtr predictor_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "constant") return std::make_shared<ConstantPredictor>(j.at("label").get<int>() != 0);
  if (kind == "indexed") {
    const std::size_t n = j.at("n");
    Bitset pred = Bitset::from_hex(n, j.at("predictions").get<std::string>());
    Bitset known = j.contains("known") ? Bitset::from_hex(n, j.at("known").get<std::string>()) : Bitset(n, true);
    return std::make_shared<IndexedPredictor>(std::move(pred), std::move(known));
  }
  if (kind == "forest") {
    if (j.value("version", 0) != 1) throw DataError("unsupported forest version");
    ForestConfig cfg;
    const auto& c = j.at("config");
    cfg.n_trees = c.at("n_trees");
    cfg.max_depth = c.at("max_depth");
    cfg.min_samples_split = c.at("min_samples_split");
    cfg.seed = c.at("seed");
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      for (const auto& n : t) {
        tree.nodes.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<std::int32_t>(), n.at(2).get<std::int32_t>(),
                              n.at(3).get<std::uint8_t>()});
      }
      trees.push_back(std::move(tree));
    }
    return std::make_shared<RandomForest>(cfg, j.at("features").get<std::vector<std::string>>(), std::move(trees));
  }
  throw DataError("unknown predictor kind: " + kind);
}

}  // namespace hicd
