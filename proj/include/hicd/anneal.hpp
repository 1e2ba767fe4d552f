#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hicd/blackbox.hpp"
#include "hicd/data.hpp"
#include "hicd/hybrid.hpp"
#include "hicd/rules.hpp"
#include "hicd/search.hpp"
#include "json.hpp"

namespace hicd {

enum class AnnealMode { Set, List };

std::string to_string(AnnealMode m);

struct AnnealConfig {
  double beta_transparency = 0.0;  // weight on the deferred fraction
  double lambda_sparsity = 0.001;  // per-rule penalty
  std::size_t iterations = 2000;
  double initial_temperature = 0.01;
  double cooling = 0.998;
  std::uint64_t seed = 0;
  AnnealMode mode = AnnealMode::List;
  std::size_t max_rules = 10;

  void validate() const;
};

struct AnnealResult {
  HybridModel model;
  double objective = 0.0;
  double initial_objective = 0.0;
  std::size_t accepted = 0;
  std::vector<nlohmann::json> log;
};

/// Simulated annealing over rule prefixes against a pre-trained black box, minimizing the
/// post-training objective. Set mode keeps rules in universe order; list mode also reorders.
AnnealResult anneal_train(const BinaryDataset& ds, std::span<const std::size_t> rows, const RuleUniverse& universe,
                          PredictorPtr blackbox, const AnnealConfig& cfg);

}  // namespace hicd
