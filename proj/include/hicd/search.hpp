#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hicd/bitset.hpp"
#include "hicd/blackbox.hpp"
#include "hicd/data.hpp"
#include "hicd/hybrid.hpp"
#include "hicd/rules.hpp"
#include "json.hpp"

namespace hicd {

enum class SearchMode { Pre, Post };

std::string to_string(SearchMode m);

struct SearchConfig {
  double lambda = 0.001;  // per-rule penalty
  double beta = 0.0;      // weight on the deferred fraction
  double c_min = 0.0;     // minimum transparency of an incumbent
  double eta = 1.0;       // maximum ICD of an incumbent
  std::optional<std::string> attribute;  // no attribute: no ICD constraint
  std::size_t max_prefix_len = 10;
  double time_limit = 300.0;  // seconds, <= 0 disables
  std::size_t memory_limit = std::size_t{8} << 30;
  std::size_t max_nodes = 0;  // node expansions, 0 disables

  void validate() const;
};

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Class id per position; rows with identical full binary feature vectors share a class.
std::vector<std::uint32_t> equivalence_classes(const BinaryDataset& ds, std::span<const std::size_t> rows);

/// Minimum number of 0/1 errors any function of the features makes on the positions in `subset`:
/// sum over classes of the minority-label count inside the subset.
std::size_t incons(const BinaryDataset& ds, std::span<const std::size_t> rows, const Bitset& subset);

/// Majority label; ties go to 1.
bool best_consequent(const Bitset& labels, const Bitset& captured);

/// Prefix misclassifications on captured positions, using each rule's stored consequent.
std::size_t prefix_errors(const Prefix& p, const BinaryDataset& ds, std::span<const std::size_t> rows);

/// (err(r,S_r) + incons(S \ S_r))/|S| + lambda*|r| + beta*|S \ S_r|/|S|
double objective_pre(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                     const SearchConfig& cfg);
/// (err(r,S_r) + err(h_c, S \ S_r))/|S| + lambda*|r| + beta*|S \ S_r|/|S|; bb is aligned with rows.
double objective_post(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                      const Bitset& bb_predictions, const SearchConfig& cfg);
/// Admissible bound on the objective of every extension of `p` (beta term dropped).
double lower_bound(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                   const SearchConfig& cfg, SearchMode mode, const Bitset* bb_predictions = nullptr);

/// Training-sample ICD of the prefix's capture set.
double prefix_icd(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                  const std::string& attribute);

/// The constant-majority prefix [(True -> q0)], transparency 1.
Prefix majority_prefix(const BinaryDataset& ds, std::span<const std::size_t> rows);

/// Objective numerator/denominator composition shared by every evaluation path.
inline double compose_objective(std::size_t error_count, std::size_t length, std::size_t uncaptured, std::size_t n,
                                const SearchConfig& cfg) {
  return static_cast<double>(error_count) / static_cast<double>(n) + cfg.lambda * static_cast<double>(length) +
         cfg.beta * (static_cast<double>(uncaptured) / static_cast<double>(n));
}
inline double compose_bound(std::size_t error_count, std::size_t length, std::size_t n, const SearchConfig& cfg) {
  return static_cast<double>(error_count) / static_cast<double>(n) + cfg.lambda * static_cast<double>(length);
}

/// Positions-level view of a training sample against a rule universe. Shared by the exact search
/// and the annealing learner.
class SampleIndex {
 public:
  SampleIndex(const BinaryDataset& ds, std::span<const std::size_t> rows, const RuleUniverse& universe,
              const Bitset* bb_predictions, const std::optional<std::string>& attribute);

  std::size_t n() const { return n_; }
  const Bitset& labels() const { return labels_; }
  const Bitset& support(std::size_t a) const { return supports_[a]; }
  std::size_t n_antecedents() const { return supports_.size(); }
  bool has_blackbox() const { return has_bb_; }

  /// incons(S \ cap) for class-closed `cap` (every capture set of a rule prefix is class-closed).
  std::size_t incons_outside(const Bitset& cap) const { return Bitset::count_and_not(incons_marker_, cap); }
  std::size_t bb_errors_outside(const Bitset& cap) const { return Bitset::count_and_not(bb_wrong_, cap); }
  std::size_t post_floor_outside(const Bitset& cap) const { return Bitset::count_and_not(post_floor_, cap); }
  const Bitset& incons_marker_ref() const { return incons_marker_; }
  const Bitset& post_floor_ref() const { return post_floor_; }

  /// ICD of a capture set; 0 when no attribute was given.
  double icd(const Bitset& cap) const;

  struct Evaluation {
    Bitset capture;
    std::size_t errors = 0;  // prefix errors on captured positions
    std::vector<bool> consequents;
  };
  /// Consequents chosen as the majority label of each rule's newly captured positions.
  Evaluation evaluate(std::span<const std::uint32_t> antecedents) const;

  double objective(const Evaluation& e, std::size_t length, const SearchConfig& cfg, SearchMode mode) const;

 private:
  std::size_t n_ = 0;
  Bitset labels_;
  std::vector<Bitset> supports_;
  Bitset incons_marker_;
  Bitset bb_wrong_;
  Bitset post_floor_;
  bool has_bb_ = false;
  std::vector<Bitset> groups_;
  std::vector<std::size_t> group_sizes_;
};

struct SearchStats {
  std::size_t expanded = 0;
  std::size_t pushed = 0;
  std::size_t pruned_bound = 0;
  std::size_t pruned_symmetry = 0;
  std::size_t useless = 0;
  std::size_t incumbent_updates = 0;
  std::size_t max_queue = 0;
  double seconds = 0.0;
};

struct SearchResult {
  Prefix prefix;
  double objective = 0.0;
  double transparency = 0.0;
  double icd = 0.0;
  bool optimal = true;  // false when a time, memory or node limit stopped the search
  std::string stop_reason;
  SearchStats stats;
  std::vector<nlohmann::json> log;  // audit log records, one JSON object per line
};

/// Best-first branch and bound over ordered prefixes of distinct antecedents, with incumbent
/// updates gated on transparency >= c_min and ICD <= eta. `initial` must itself be feasible.
/// bb_predictions (aligned with rows) is required in Post mode.
SearchResult search(const BinaryDataset& ds, std::span<const std::size_t> rows, const RuleUniverse& universe,
                    const SearchConfig& cfg, SearchMode mode, const Bitset* bb_predictions, const Prefix& initial);

/// Trains the black box on the positions the prefix leaves uncaptured.
HybridModel finalize_pre(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& prefix,
                         const ForestConfig& forest_cfg, Provenance provenance,
                         std::vector<std::string>* warnings = nullptr);

}  // namespace hicd
