#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hicd/anneal.hpp"
#include "hicd/blackbox.hpp"
#include "hicd/data.hpp"
#include "hicd/hybrid.hpp"
#include "hicd/rules.hpp"
#include "hicd/search.hpp"
#include "json.hpp"

namespace hicd {

enum class Method { Pre, Post, AnnealSet, AnnealList };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// One hyperparameter configuration of one learner. Models sharing `learner` form one
/// Rashomon set (dedup and binning are per learner).
struct LearnerSpec {
  std::string learner;
  Method method = Method::Post;
  SearchConfig search;
  AnnealConfig anneal;
  nlohmann::json hyperparameters = nlohmann::json::object();
};

struct BuildConfig {
  std::size_t n_bootstrap = 0;
  std::uint64_t base_seed = 0;
  ForestConfig forest;
  int workers = 0;  // 0: OpenMP default
  bool keep_logs = false;
};

struct Member {
  std::string id;
  std::string learner;
  std::size_t spec = 0;
  std::size_t run = 0;
  HybridModel model;  // black box replaced by its stored predictions over the whole dataset
  double objective = 0.0;
  bool optimal = true;
  std::size_t expanded = 0;
  double train_transparency = 0.0;  // on the original training split
  double train_accuracy = 0.0;
  std::optional<double> sample_icd;  // on the model's own training sample, constrained attribute
  Bitset fingerprint;                // black-box predictions on the training split
  int bin = -1;
  std::vector<nlohmann::json> log;  // learner audit log, kept on request
};

struct Failure {
  std::string learner;
  std::size_t spec = 0;
  std::size_t run = 0;
  std::string message;
};

struct RashomonCollection {
  std::vector<Member> members;
  std::vector<Failure> failures;
  std::optional<double> epsilon;
  /// (learner, bin) -> max train accuracy used by the epsilon filter
  std::map<std::pair<std::string, int>, double> bin_reference;

  std::vector<std::string> learners() const;
  /// Indices of members of `learner` in `bin` (bin < 0: all bins).
  std::vector<std::size_t> select(const std::string& learner, int bin = -1) const;
};

/// Run 0 trains on the training split; runs 1..n_bootstrap on bootstrap resamples. Run r uses
/// resample seed derive_seed(base, r) and black-box seed derive_seed(base, r, 1). Runs are
/// distributed over threads; the result equals build_serial.
RashomonCollection build(const BinaryDataset& ds, const SplitSpec& split, const RuleUniverse& universe,
                         const std::vector<LearnerSpec>& specs, const BuildConfig& cfg);
RashomonCollection build_serial(const BinaryDataset& ds, const SplitSpec& split, const RuleUniverse& universe,
                                const std::vector<LearnerSpec>& specs, const BuildConfig& cfg);

/// Same learner, identical prefix and fingerprint agreement >= threshold: keep the first.
RashomonCollection dedup(const RashomonCollection& c, double agreement_threshold = 0.99);

/// [0,.25) -> 0, [.25,.5) -> 1, [.5,.75) -> 2, [.75,1] -> 3
int transparency_bin(double t);
std::string bin_label(int bin);
void assign_bins(RashomonCollection& c);

/// Keeps members with train accuracy >= (1 - eps) * max train accuracy of their (learner, bin).
RashomonCollection filter_epsilon(const RashomonCollection& c, double epsilon);

/// Capture bitset of each member over positions of `rows`.
std::vector<Bitset> member_captures(const RashomonCollection& c, std::span<const std::size_t> members,
                                    const BinaryDataset& ds, std::span<const std::size_t> rows);

/// Fraction of `members` whose capture region contains each position of `rows`.
std::vector<double> icf(const RashomonCollection& c, std::span<const std::size_t> members, const BinaryDataset& ds,
                        std::span<const std::size_t> rows);
std::vector<double> icf_serial(const RashomonCollection& c, std::span<const std::size_t> members,
                               const BinaryDataset& ds, std::span<const std::size_t> rows);

inline double ica(double icf_value) { return 1.0 - 2.0 * std::abs(icf_value - 0.5); }

enum class Metric { ICD, SP, EO, Accuracy, Sparsity, Transparency };
std::string to_string(Metric m);

/// Metric of each member on `rows`.
std::vector<double> member_metric(const RashomonCollection& c, std::span<const std::size_t> members, Metric metric,
                                  const BinaryDataset& ds, std::span<const std::size_t> rows,
                                  const std::string& attribute);
std::vector<double> member_metric_serial(const RashomonCollection& c, std::span<const std::size_t> members,
                                         Metric metric, const BinaryDataset& ds, std::span<const std::size_t> rows,
                                         const std::string& attribute);

struct Summary {
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
  std::vector<double> values;
};
Summary summarize(std::vector<double> values);

/// Per-bin summary for one learner; empty bins yield nullopt.
std::array<std::optional<Summary>, 4> bin_metric_distribution(const RashomonCollection& c, const std::string& learner,
                                                              Metric metric, const BinaryDataset& ds,
                                                              std::span<const std::size_t> rows,
                                                              const std::string& attribute);

/// Members per bin surviving the filter at each epsilon (input deduped and binned).
std::vector<std::array<std::size_t, 4>> growth_curve(const RashomonCollection& c, const std::string& learner,
                                                     std::span<const double> epsilons);

}  // namespace hicd
