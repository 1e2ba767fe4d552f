#include <doctest.h>

#include <set>

#include "hicd/anneal.hpp"
#include "support.hpp"

using namespace hicd;

namespace {

struct Fixture {
  testing::ToyInstance t;
  IndexList rows;
  RuleUniverse u;
  PredictorPtr bb;
};

Fixture random_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f;
  f.t = testing::random_instance(rng, 60, 6, 2);
  f.rows = testing::iota_rows(60);
  f.u = testing::make_universe(f.t, f.rows, testing::random_conjunctions(rng, 6, 12));
  std::vector<int> bb(60);
  for (std::size_t i = 0; i < 60; ++i) bb[i] = std::bernoulli_distribution(0.65)(rng) ? f.t.y[i] : 1 - f.t.y[i];
  f.bb = std::make_shared<IndexedPredictor>(testing::bits_of(bb));
  return f;
}

std::vector<std::size_t> ids_of(const Prefix& p) {
  std::vector<std::size_t> ids;
  for (const auto& r : p.rules) ids.push_back(r.antecedent.id);
  return ids;
}

}  // namespace

TEST_CASE("a single step never worsens the start") {
  auto f = random_fixture(50);
  AnnealConfig cfg;
  cfg.iterations = 1;
  for (std::uint64_t s = 0; s < 10; ++s) {
    cfg.seed = s;
    const auto r = anneal_train(f.t.ds, f.rows, f.u, f.bb, cfg);
    CHECK(r.model.prefix.size() <= 1);
    CHECK(r.objective <= r.initial_objective);
  }
}

TEST_CASE("with no penalties the result is at least as good as the black box") {
  auto f = random_fixture(51);
  AnnealConfig cfg;
  cfg.lambda_sparsity = 0.0;
  cfg.beta_transparency = 0.0;
  cfg.iterations = 3000;
  const auto r = anneal_train(f.t.ds, f.rows, f.u, f.bb, cfg);
  SearchConfig sc;
  sc.lambda = 0.0;
  const Bitset bbp = f.bb->predict(f.t.ds, f.rows);
  CHECK(r.initial_objective == objective_post(f.t.ds, f.rows, Prefix{}, bbp, sc));
  CHECK(r.objective <= r.initial_objective);
  CHECK(r.objective < r.initial_objective);
}

TEST_CASE("reported objective matches a recomputation") {
  for (std::uint64_t seed = 52; seed < 60; ++seed) {
    auto f = random_fixture(seed);
    AnnealConfig cfg;
    cfg.seed = seed;
    cfg.beta_transparency = 0.1;
    cfg.lambda_sparsity = 0.005;
    cfg.mode = seed % 2 ? AnnealMode::Set : AnnealMode::List;
    const auto r = anneal_train(f.t.ds, f.rows, f.u, f.bb, cfg);
    SearchConfig sc;
    sc.lambda = cfg.lambda_sparsity;
    sc.beta = cfg.beta_transparency;
    const Bitset bbp = f.bb->predict(f.t.ds, f.rows);
    CHECK(objective_post(f.t.ds, f.rows, r.model.prefix, bbp, sc) == doctest::Approx(r.objective).epsilon(1e-12));
    const auto e = testing::naive_prefix(f.t, f.rows, f.u, ids_of(r.model.prefix));
    for (std::size_t k = 0; k < r.model.prefix.size(); ++k)
      CHECK(r.model.prefix.rules[k].consequent == e.consequents[k]);
    CHECK(r.model.prefix.size() <= cfg.max_rules);
    if (cfg.mode == AnnealMode::Set) {
      const auto ids = ids_of(r.model.prefix);
      CHECK(std::is_sorted(ids.begin(), ids.end()));
    }
    CHECK(r.model.provenance.method == (cfg.mode == AnnealMode::Set ? "anneal_set" : "anneal_list"));
  }
}

TEST_CASE("fixed seed is deterministic and max_rules is respected") {
  auto f = random_fixture(61);
  AnnealConfig cfg;
  cfg.seed = 9;
  cfg.max_rules = 2;
  cfg.lambda_sparsity = 0.0;
  const auto a = anneal_train(f.t.ds, f.rows, f.u, f.bb, cfg);
  const auto b = anneal_train(f.t.ds, f.rows, f.u, f.bb, cfg);
  CHECK(a.model.prefix.same_rules(b.model.prefix));
  CHECK(a.objective == b.objective);
  CHECK(a.model.prefix.size() <= 2);
}

TEST_CASE("symmetric optima are both reached across seeds") {
  // Features 0 and 1 are identical copies of the label; the black box always predicts 0, so
  // either single rule (f0 -> 1) or (f1 -> 1) is optimal.
  std::mt19937_64 rng(62);
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  std::vector<std::uint32_t> g;
  for (int i = 0; i < 40; ++i) {
    const int lab = i % 2;
    x.push_back({lab, lab, static_cast<int>(rng() % 2)});
    y.push_back(lab);
    g.push_back(static_cast<std::uint32_t>(i % 3 == 0));
  }
  testing::ToyInstance t{x, y, g, 2, testing::make_dataset(x, y, g, 2)};
  const auto rows = testing::iota_rows(40);
  const auto u = testing::make_universe(t, rows, {{{0, true}}, {{1, true}}, {{2, true}}, {{2, false}}});
  const auto bb = std::make_shared<ConstantPredictor>(false);
  AnnealConfig cfg;
  cfg.lambda_sparsity = 0.01;
  cfg.iterations = 300;
  std::set<std::vector<std::size_t>> optima;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = s;
    const auto r = anneal_train(t.ds, rows, u, bb, cfg);
    CHECK(r.objective == doctest::Approx(0.01));
    optima.insert(ids_of(r.model.prefix));
  }
  CHECK(optima.size() == 2);
  CHECK(optima.contains({0}));
  CHECK(optima.contains({1}));
}

TEST_CASE("invalid configurations") {
  auto f = random_fixture(63);
  AnnealConfig cfg;
  cfg.cooling = 1.0;
  CHECK_THROWS(anneal_train(f.t.ds, f.rows, f.u, f.bb, cfg));
  cfg = AnnealConfig{};
  CHECK_THROWS_AS(anneal_train(f.t.ds, f.rows, RuleUniverse{}, f.bb, cfg), SearchError);
}
