// Parallel kernels against their serial references on a synthetic dataset.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "hicd/pipeline.hpp"

using namespace hicd;

namespace {

struct Fixture {
  BinaryDataset ds;
  SplitSpec split;
  RuleUniverse universe;
  RashomonCollection collection;
  std::vector<std::size_t> members;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    const auto dir = std::filesystem::temp_directory_path() / "hicd_bench";
    x.ds = prepare_dataset(DatasetManifest::load(write_synthetic(dir, 4000, 1)));
    x.split = split(x.ds, 0);
    MiningConfig mc;
    mc.max_rules = 150;
    x.universe = mine_antecedents(x.ds, x.split.train, mc);
    // A collection of random prefixes stands in for a Rashomon set.
    std::mt19937_64 rng(7);
    ForestConfig fc;
    fc.n_trees = 10;
    IndexList everyone(x.ds.n());
    std::iota(everyone.begin(), everyone.end(), std::size_t{0});
    const PredictorPtr bb =
        std::make_shared<IndexedPredictor>(train_forest_serial(x.ds, x.split.train, fc)->predict(x.ds, everyone));
    for (std::size_t k = 0; k < 200; ++k) {
      Member m;
      m.learner = "L";
      const std::size_t len = 1 + rng() % 6;
      for (std::size_t j = 0; j < len; ++j)
        m.model.prefix.rules.push_back(Rule{x.universe.antecedents[rng() % x.universe.size()], rng() % 2 == 1});
      m.model.blackbox = bb;
      x.collection.members.push_back(std::move(m));
      x.members.push_back(k);
    }
    return x;
  }();
  return f;
}

ForestConfig forest_config() {
  ForestConfig c;
  c.n_trees = 32;
  c.seed = 3;
  return c;
}

void BM_forest_parallel(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(train_forest(f.ds, f.split.train, forest_config()));
}

void BM_forest_serial(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(train_forest_serial(f.ds, f.split.train, forest_config()));
}

void BM_icf_parallel(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(icf(f.collection, f.members, f.ds, f.split.test));
}

void BM_icf_serial(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(icf_serial(f.collection, f.members, f.ds, f.split.test));
}

void BM_icd_parallel(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s)
    benchmark::DoNotOptimize(member_metric(f.collection, f.members, Metric::ICD, f.ds, f.split.test, "Group"));
}

void BM_icd_serial(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s)
    benchmark::DoNotOptimize(member_metric_serial(f.collection, f.members, Metric::ICD, f.ds, f.split.test, "Group"));
}

std::vector<LearnerSpec> bench_specs() {
  LearnerSpec post;
  post.learner = "post";
  post.method = Method::Post;
  post.search.c_min = 0.3;
  post.search.max_nodes = 300;
  post.search.time_limit = 0;
  return {post};
}

BuildConfig build_config() {
  BuildConfig c;
  c.n_bootstrap = 7;
  c.forest.n_trees = 10;
  return c;
}

void BM_build_parallel(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(build(f.ds, f.split, f.universe, bench_specs(), build_config()));
}

void BM_build_serial(benchmark::State& s) {
  const auto& f = fixture();
  for (auto _ : s) benchmark::DoNotOptimize(build_serial(f.ds, f.split, f.universe, bench_specs(), build_config()));
}

}  // namespace

BENCHMARK(BM_forest_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_forest_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_icf_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_icf_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_icd_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_icd_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_build_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_build_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
