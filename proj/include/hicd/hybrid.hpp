#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hicd/blackbox.hpp"
#include "hicd/data.hpp"
#include "hicd/rules.hpp"
#include "json.hpp"

namespace hicd {

struct Rule {
  Antecedent antecedent;
  bool consequent = false;
};

/// Ordered rule list; an example is captured by the first rule whose antecedent matches it.
/// There is no default rule: uncaptured examples are deferred to the black box.
struct Prefix {
  std::vector<Rule> rules;

  std::size_t size() const { return rules.size(); }
  bool empty() const { return rules.empty(); }

  /// For every position of `rows`, the index of the capturing rule or -1.
  std::vector<std::int32_t> route(const BinaryDataset& ds, std::span<const std::size_t> rows) const;
  /// Cumulative capture bitset over positions of `rows`.
  Bitset capture(const BinaryDataset& ds, std::span<const std::size_t> rows) const;
  /// Rule i captures support(a_i) minus everything captured by rules 0..i-1.
  std::vector<Bitset> per_rule_capture(const BinaryDataset& ds, std::span<const std::size_t> rows) const;

  /// Same antecedents in the same order with the same consequents.
  bool same_rules(const Prefix& o) const;
};

struct Provenance {
  std::string method;   // pre | post | anneal_set | anneal_list | external
  std::string learner;  // configured learner name, e.g. "HybridCORELSPost"
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::uint64_t bootstrap_seed = 0;
  std::size_t run = 0;  // 0 = reference model on the unresampled training split
};

struct HybridModel {
  Prefix prefix;
  PredictorPtr blackbox;
  Provenance provenance;
};

bool predict(const HybridModel& m, const BinaryDataset& ds, std::size_t idx);
Bitset predict_all(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows);

double transparency(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows);

struct GroupRate {
  std::string group;
  std::size_t numerator = 0;
  std::size_t denominator = 0;
  double rate() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

/// Per-group rate of `flags` over positions of `rows`, restricted to positions where `eligible`
/// is set when given. Groups with no eligible positions are omitted. Throws MetricError when
/// fewer than two groups remain.
std::vector<GroupRate> group_rates(const BinaryDataset& ds, std::span<const std::size_t> rows,
                                   const std::string& attribute, const Bitset& flags, const Bitset* eligible = nullptr);
/// max rate - min rate
double max_rate_gap(const std::vector<GroupRate>& rates);

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// IC_p = |Omega ∩ S_p| / |S_p| over nonempty groups.
std::vector<GroupRate> group_coverage(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows,
                                      const std::string& attribute);
double icd(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows,
           const std::string& attribute);
/// ICD of an arbitrary capture bitset aligned with `rows`.
double icd_of_capture(const Bitset& capture, const BinaryDataset& ds, std::span<const std::size_t> rows,
                      const std::string& attribute);
double accuracy(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows);
double accuracy_of(const Bitset& predictions, const BinaryDataset& ds, std::span<const std::size_t> rows);

/// Largest gap in positive-prediction rates; `pred` is aligned with `rows`.
double statistical_parity(const Bitset& pred, const BinaryDataset& ds, std::span<const std::size_t> rows,
                          const std::string& attribute);
/// Largest gap in true-positive rates; groups without positives are skipped.
double equal_opportunity(const Bitset& pred, const BinaryDataset& ds, std::span<const std::size_t> rows,
                         const std::string& attribute);

inline std::size_t sparsity(const HybridModel& m) { return m.prefix.size(); }

/// {rules: [{literals: [[feature, value]...], q}], blackbox_ref, provenance}
nlohmann::json model_to_json(const HybridModel& m, const BinaryDataset& ds, const nlohmann::json& blackbox_ref);
HybridModel model_from_json(const nlohmann::json& j, const BinaryDataset& ds);
nlohmann::json prefix_to_json(const Prefix& p, const BinaryDataset& ds);
Prefix prefix_from_json(const nlohmann::json& j, const BinaryDataset& ds);

/// if/else-if/else text form.
std::string render(const Prefix& p, const BinaryDataset& ds);

}  // namespace hicd
