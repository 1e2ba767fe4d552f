#include "hicd/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hicd {

std::string to_string(AnnealMode m) { return m == AnnealMode::Set ? "set" : "list"; }

void AnnealConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("anneal: iterations must be >= 1");
  if (!(initial_temperature > 0.0)) throw std::invalid_argument("anneal: temperature must be > 0");
  if (!(cooling > 0.0 && cooling < 1.0)) throw std::invalid_argument("anneal: cooling rate must lie in (0, 1)");
  if (!(beta_transparency >= 0.0) || !(lambda_sparsity >= 0.0))
    throw std::invalid_argument("anneal: weights must be >= 0");
  if (max_rules < 1) throw std::invalid_argument("anneal: max_rules must be >= 1");
}

namespace {

enum class Move { Add, Remove, Swap, Reorder };

}  // namespace

AnnealResult anneal_train(const BinaryDataset& ds, std::span<const std::size_t> rows, const RuleUniverse& universe,
                          PredictorPtr blackbox, const AnnealConfig& cfg) {
  cfg.validate();
  if (universe.empty()) throw SearchError("anneal: empty rule universe");
  if (!blackbox) throw SearchError("anneal: black box missing");

  const Bitset bb = blackbox->predict(ds, rows);
  const SampleIndex idx(ds, rows, universe, &bb, std::nullopt);
  SearchConfig scfg;
  scfg.lambda = cfg.lambda_sparsity;
  scfg.beta = cfg.beta_transparency;
  const auto n_ante = static_cast<std::uint32_t>(idx.n_antecedents());

  auto score = [&](const std::vector<std::uint32_t>& s) {
    return idx.objective(idx.evaluate(s), s.size(), scfg, SearchMode::Post);
  };

  std::mt19937_64 rng(cfg.seed);
  auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::uint32_t> cur;
  double cur_obj = score(cur);
  AnnealResult res;
  res.initial_objective = cur_obj;
  std::vector<std::uint32_t> best = cur;
  double best_obj = cur_obj;
  double temp = cfg.initial_temperature;

  for (std::size_t it = 0; it < cfg.iterations; ++it, temp *= cfg.cooling) {
    std::vector<Move> moves;
    if (cur.size() < std::min<std::size_t>(cfg.max_rules, n_ante)) moves.push_back(Move::Add);
    if (!cur.empty()) moves.push_back(Move::Remove);
    if (!cur.empty() && cur.size() < n_ante) moves.push_back(Move::Swap);
    if (cfg.mode == AnnealMode::List && cur.size() >= 2) moves.push_back(Move::Reorder);
    if (moves.empty()) break;

    auto unused = [&] {
      std::uint32_t a;
      do {
        a = static_cast<std::uint32_t>(pick(n_ante));
      } while (std::find(cur.begin(), cur.end(), a) != cur.end());
      return a;
    };

    std::vector<std::uint32_t> cand = cur;
    const Move mv = moves[pick(moves.size())];
    switch (mv) {
      case Move::Add: {
        const auto a = unused();
        if (cfg.mode == AnnealMode::List) {
          cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(pick(cand.size() + 1)), a);
        } else {
          cand.insert(std::upper_bound(cand.begin(), cand.end(), a), a);
        }
        break;
      }
      case Move::Remove:
        cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(pick(cand.size())));
        break;
      case Move::Swap:
        cand[pick(cand.size())] = unused();
        if (cfg.mode == AnnealMode::Set) std::sort(cand.begin(), cand.end());
        break;
      case Move::Reorder: {
        const std::size_t i = pick(cand.size());
        std::size_t j = pick(cand.size() - 1);
        if (j >= i) ++j;
        std::swap(cand[i], cand[j]);
        break;
      }
    }

    const double obj = score(cand);
    const double delta = obj - cur_obj;
    if (delta <= 0.0 || unit(rng) < std::exp(-delta / temp)) {
      cur = std::move(cand);
      cur_obj = obj;
      ++res.accepted;
      if (cur_obj < best_obj) {
        best = cur;
        best_obj = cur_obj;
        res.log.push_back({{"event", "incumbent"}, {"iteration", it}, {"objective", best_obj}});
      }
    }
  }

  const auto eval = idx.evaluate(best);
  for (std::size_t i = 0; i < best.size(); ++i) {
    Rule r;
    r.antecedent = universe.antecedents[best[i]];
    r.consequent = eval.consequents[i];
    res.model.prefix.rules.push_back(std::move(r));
  }
  res.model.blackbox = std::move(blackbox);
  res.model.provenance.method = "anneal_" + to_string(cfg.mode);
  res.model.provenance.hyperparameters = {{"beta_transparency", cfg.beta_transparency},
                                          {"lambda_sparsity", cfg.lambda_sparsity},
                                          {"iterations", cfg.iterations},
                                          {"seed", cfg.seed}};
  res.objective = best_obj;
  res.log.push_back({{"event", "done"}, {"objective", best_obj}, {"accepted", res.accepted}});
  return res;
}

}  // namespace hicd
