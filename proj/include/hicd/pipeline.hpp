#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hicd/anneal.hpp"
#include "hicd/blackbox.hpp"
#include "hicd/data.hpp"
#include "hicd/rashomon.hpp"
#include "hicd/rules.hpp"
#include "hicd/search.hpp"
#include "json.hpp"

namespace hicd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One learner and its hyperparameter grid. `grid_key` names the SearchConfig or AnnealConfig
/// field that varies.
struct LearnerEntry {
  std::string learner;
  Method method = Method::Post;
  std::string grid_key;
  std::vector<double> grid;
  nlohmann::json search_overrides = nlohmann::json::object();
  nlohmann::json anneal_overrides = nlohmann::json::object();
};

struct RunConfig {
  std::filesystem::path dataset;  // manifest; relative paths resolve against the config file
  std::uint64_t seed = 0;         // bootstrap and black-box seeds derive from this
  std::uint64_t split_seed = 0;
  MiningConfig mining;
  ForestConfig forest;
  SearchConfig search;
  AnnealConfig anneal;
  std::vector<LearnerEntry> learners;
  std::size_t n_bootstrap = 100;
  double agreement_threshold = 0.99;
  std::vector<double> epsilons{0.01};
  std::vector<double> growth_epsilons;
  std::vector<std::string> attributes;  // audited attributes
  // Constrained copies of the exact learners: one per eta, binding `mitigation_attribute`.
  std::vector<double> etas;
  std::optional<std::string> mitigation_attribute;
  double alpha = 0.05;
  int workers = 0;
  std::filesystem::path out = "out";

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;

  /// Grid expansion, mitigation copies included.
  std::vector<LearnerSpec> learner_specs() const;
};

/// Paper grids: 10 minimum-transparency values for the exact learners, log-spaced weights for
/// the annealing learners.
std::vector<double> default_grid(Method m);
std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t n);

/// Applies --flag / HICD_* style overrides; unset fields are left untouched.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<double> time_limit;
  std::optional<std::size_t> memory_limit;
  std::optional<double> eta;
  std::optional<double> epsilon;
  std::optional<std::string> attribute;

  void apply(RunConfig& cfg) const;
};

// Collection cache ----------------------------------------------------------

void save_collection(const RashomonCollection& c, const BinaryDataset& ds, const std::filesystem::path& path);
RashomonCollection load_collection(const BinaryDataset& ds, const SplitSpec& split,
                                   const std::filesystem::path& path);

// Commands --------------------------------------------------------------------
// Each reads its inputs from cfg.out and writes its artifacts there. Missing upstream artifacts
// raise ConfigError naming the command to run first.

struct CommandResult {
  std::vector<std::string> warnings;
  std::size_t failures = 0;
};

CommandResult cmd_prepare(const RunConfig& cfg);
CommandResult cmd_mine(const RunConfig& cfg);
CommandResult cmd_train(const RunConfig& cfg);
CommandResult cmd_bootstrap(const RunConfig& cfg);
CommandResult cmd_audit(const RunConfig& cfg);
CommandResult cmd_report(const RunConfig& cfg);
CommandResult run_all(const RunConfig& cfg);

// Synthetic data --------------------------------------------------------------

/// Writes a CSV plus dataset manifest with a three-level sensitive attribute whose groups differ
/// in their feature distributions. Returns the manifest path.
std::filesystem::path write_synthetic(const std::filesystem::path& dir, std::size_t n, std::uint64_t seed);

}  // namespace hicd
