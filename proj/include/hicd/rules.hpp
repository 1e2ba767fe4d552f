#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hicd/bitset.hpp"
#include "hicd/data.hpp"

namespace hicd {

/// A binary feature required to take `value`.
struct Literal {
  std::uint32_t feature = 0;
  bool value = true;

  friend auto operator<=>(const Literal&, const Literal&) = default;
};

/// Conjunction of literals. An empty literal list is the constant-true antecedent, which is only
/// used for default/initial rules and never appears in a mined universe.
struct Antecedent {
  std::vector<Literal> literals;
  Bitset support;  // over the mining index list (positions, not dataset indices)
  std::size_t id = 0;

  bool is_true() const { return literals.empty(); }
  bool matches(const BinaryDataset& ds, std::size_t row) const;
  /// Capture bitset over positions of `rows` (rows may repeat).
  Bitset evaluate(const BinaryDataset& ds, std::span<const std::size_t> rows) const;
  std::string describe(const BinaryDataset& ds) const;
};

struct MiningConfig {
  double min_support = 0.01;
  std::size_t max_card = 2;
  std::size_t max_rules = 300;
  bool negations = true;  // mine over each feature and its complement
};

struct RuleUniverse {
  std::vector<Antecedent> antecedents;  // descending support, then lexicographic literal order
  double min_support = 0.0;
  std::size_t max_rules = 0;
  std::size_t n_mining_rows = 0;

  std::size_t size() const { return antecedents.size(); }
  bool empty() const { return antecedents.empty(); }
};

/// Frequent conjunctions of at most max_card literals over the rows `train`, truncated to the
/// max_rules largest supports. Throws DataError("empty rule universe") when nothing is frequent.
RuleUniverse mine_antecedents(const BinaryDataset& ds, std::span<const std::size_t> train, const MiningConfig& cfg);

/// |a.support ∩ subset| where subset holds positions into the mining index list.
std::size_t support_of(const Antecedent& a, std::span<const std::size_t> subset);
std::size_t support_of(const Antecedent& a, const Bitset& subset);

/// Raw FP-Growth output: every itemset (sorted literal list) whose count reaches min_count.
struct FrequentItemset {
  std::vector<Literal> literals;
  std::size_t count = 0;
};
std::vector<FrequentItemset> fp_growth(const std::vector<std::vector<std::uint32_t>>& transactions,
                                       std::size_t n_items, std::size_t min_count, std::size_t max_len);

/// Cache holds literal lists by feature name plus support counts; reloading recomputes bitsets.
void save_universe(const RuleUniverse& u, const BinaryDataset& ds, const std::filesystem::path& path);
RuleUniverse load_universe(const BinaryDataset& ds, std::span<const std::size_t> train,
                           const std::filesystem::path& path);

}  // namespace hicd
