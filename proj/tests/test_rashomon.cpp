#include <doctest.h>

#include "hicd/rashomon.hpp"
#include "support.hpp"

using namespace hicd;

namespace {

Member member(std::string learner, std::vector<std::vector<Literal>> antecedents, Bitset fingerprint) {
  Member m;
  m.learner = std::move(learner);
  for (auto& a : antecedents) {
    Rule r;
    r.antecedent.literals = std::move(a);
    r.consequent = true;
    m.model.prefix.rules.push_back(std::move(r));
  }
  m.model.blackbox = std::make_shared<ConstantPredictor>(false);
  m.fingerprint = std::move(fingerprint);
  return m;
}

Member scored(std::string learner, int bin, double acc) {
  Member m = member(std::move(learner), {}, Bitset(4));
  m.bin = bin;
  m.train_accuracy = acc;
  return m;
}

struct Built {
  testing::ToyInstance t;
  SplitSpec split;
  RuleUniverse u;
};

Built small_problem(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  Built b;
  b.t = testing::random_instance(rng, n, 6, 2);
  b.split = hicd::split(b.t.ds, seed);
  MiningConfig mc;
  mc.min_support = 0.1;
  mc.max_rules = 20;
  b.u = mine_antecedents(b.t.ds, b.split.train, mc);
  return b;
}

std::vector<LearnerSpec> two_specs() {
  LearnerSpec post;
  post.learner = "post";
  post.method = Method::Post;
  post.search.lambda = 0.01;
  post.search.c_min = 0.2;
  post.search.max_nodes = 200;
  post.search.attribute = "G";
  LearnerSpec ann;
  ann.learner = "anneal";
  ann.method = Method::AnnealList;
  ann.anneal.iterations = 200;
  return {post, ann};
}

}  // namespace

TEST_CASE("build sizes") {
  auto b = small_problem(70, 120);
  BuildConfig cfg;
  cfg.forest.n_trees = 5;
  const auto one = build(b.t.ds, b.split, b.u, {two_specs()[0]}, cfg);
  CHECK(one.members.size() + one.failures.size() == 1);
  CHECK(one.members.size() == 1);
  CHECK(one.members[0].run == 0);
  CHECK(one.members[0].sample_icd.has_value());

  cfg.n_bootstrap = 3;
  const auto many = build(b.t.ds, b.split, b.u, two_specs(), cfg);
  CHECK(many.members.size() + many.failures.size() == 8);
  CHECK(many.members.size() <= 8);
  CHECK(dedup(many).members.size() <= many.members.size());
  for (const auto& m : many.members) {
    CHECK(m.train_transparency >= 0.0);
    CHECK(m.train_transparency <= 1.0);
    CHECK(m.fingerprint.size() == b.split.train.size());
  }
}

TEST_CASE("parallel build equals serial build") {
  auto b = small_problem(71, 150);
  BuildConfig cfg;
  cfg.forest.n_trees = 5;
  cfg.n_bootstrap = 4;
  cfg.base_seed = 17;
  const auto p = build(b.t.ds, b.split, b.u, two_specs(), cfg);
  const auto s = build_serial(b.t.ds, b.split, b.u, two_specs(), cfg);
  REQUIRE(p.members.size() == s.members.size());
  for (std::size_t i = 0; i < p.members.size(); ++i) {
    CHECK(p.members[i].id == s.members[i].id);
    CHECK(p.members[i].model.prefix.same_rules(s.members[i].model.prefix));
    CHECK(p.members[i].objective == s.members[i].objective);
    CHECK(p.members[i].fingerprint == s.members[i].fingerprint);
  }
}

TEST_CASE("dedup") {
  Bitset fp(100);
  for (std::size_t i = 0; i < 100; i += 2) fp.set(i);
  Bitset half = fp;
  for (std::size_t i = 0; i < 50; ++i) half.set(i, !half.test(i));
  RashomonCollection c;
  c.members.push_back(member("L", {{{0, true}}, {{1, true}}}, fp));
  c.members.push_back(member("L", {{{0, true}}, {{1, true}}}, fp));
  CHECK(dedup(c).members.size() == 1);
  c.members[1].fingerprint = half;
  CHECK(dedup(c).members.size() == 2);
  c.members[1] = member("L", {{{1, true}}, {{0, true}}}, fp);
  CHECK(dedup(c).members.size() == 2);
  c.members[1] = member("M", {{{0, true}}, {{1, true}}}, fp);
  CHECK(dedup(c).members.size() == 2);
  CHECK_THROWS(dedup(c, 0.0));
}

TEST_CASE("transparency bins") {
  CHECK(transparency_bin(0.0) == 0);
  CHECK(transparency_bin(0.2499) == 0);
  CHECK(transparency_bin(0.25) == 1);
  CHECK(transparency_bin(0.5) == 2);
  CHECK(transparency_bin(0.75) == 3);
  CHECK(transparency_bin(1.0) == 3);
  CHECK(bin_label(0) == "Q1");
  CHECK(bin_label(3) == "Q4");
}

TEST_CASE("epsilon filter") {
  RashomonCollection c;
  c.members = {scored("L", 1, 0.9), scored("L", 1, 0.88), scored("L", 1, 0.8), scored("L", 2, 0.7),
               scored("M", 1, 0.5)};
  const auto zero = filter_epsilon(c, 0.0);
  CHECK(zero.members.size() == 3);
  CHECK(filter_epsilon(c, 1.0).members.size() == 5);
  const auto f = filter_epsilon(c, 0.05);
  CHECK(f.select("L", 1).size() == 2);
  CHECK(f.select("L", 2).size() == 1);
  CHECK(f.select("M").size() == 1);
  CHECK(f.bin_reference.at({"L", 1}) == 0.9);
  CHECK(*f.epsilon == 0.05);
  c.members.push_back(scored("L", -1, 0.9));
  CHECK_THROWS(filter_epsilon(c, 0.1));
  CHECK_THROWS(filter_epsilon(RashomonCollection{}, -0.1));
}

TEST_CASE("icf on fixed captures") {
  // Rows 0..3 with feature 0 = {1,1,0,0} and feature 1 = {1,0,1,0}.
  const auto ds = testing::make_dataset({{1, 1}, {1, 0}, {0, 1}, {0, 0}}, {0, 1, 0, 1}, {0, 0, 1, 1}, 2);
  const IndexList rows = testing::iota_rows(4);
  RashomonCollection c;
  c.members.push_back(member("L", {{{0, true}}}, Bitset(4)));
  c.members.push_back(member("L", {{{0, true}}}, Bitset(4)));
  c.members.push_back(member("L", {{{0, true}}, {{1, true}}}, Bitset(4)));
  c.members.push_back(member("L", {{{0, true}, {1, true}}}, Bitset(4)));
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const auto v = icf(c, all, ds, rows);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.75);
  CHECK(v[2] == 0.25);
  CHECK(v[3] == 0.0);
  CHECK(ica(v[0]) == 0.0);
  CHECK(ica(v[3]) == 0.0);
  CHECK(ica(0.5) == 1.0);
  CHECK(ica(v[1]) == doctest::Approx(0.5));
  CHECK(icf_serial(c, all, ds, rows) == v);
  CHECK_THROWS(icf(c, std::vector<std::size_t>{}, ds, rows));
}

TEST_CASE("icf and member metrics against naive loops") {
  std::mt19937_64 rng(72);
  const auto t = testing::random_instance(rng, 80, 5, 3);
  IndexList rows;
  for (int i = 0; i < 60; ++i) rows.push_back(rng() % 80);
  RashomonCollection c;
  std::vector<int> bb(80);
  for (auto& v : bb) v = static_cast<int>(rng() % 2);
  for (int k = 0; k < 25; ++k) {
    Member m = member("L", testing::random_conjunctions(rng, 5, 1 + rng() % 3), Bitset(4));
    for (auto& r : m.model.prefix.rules) r.consequent = rng() % 2 == 1;
    m.model.blackbox = std::make_shared<IndexedPredictor>(testing::bits_of(bb));
    c.members.push_back(std::move(m));
  }
  std::vector<std::size_t> sel{0, 3, 4, 7, 8, 9, 15, 20, 24};
  const auto got = icf(c, sel, t.ds, rows);
  std::vector<std::vector<int>> caps;
  for (auto i : sel) {
    std::vector<int> cap;
    for (auto r : rows) {
      int hit = 0;
      for (const auto& rule : c.members[i].model.prefix.rules) hit |= testing::naive_matches(t.x[r], rule.antecedent.literals) ? 1 : 0;
      cap.push_back(hit);
    }
    caps.push_back(cap);
  }
  REQUIRE(got.size() == rows.size());
  for (std::size_t p = 0; p < got.size(); ++p) CHECK(got[p] == doctest::Approx(testing::naive_icf(caps, p)).epsilon(1e-12));
  CHECK(icf_serial(c, sel, t.ds, rows) == got);
  for (auto metric : {Metric::ICD, Metric::SP, Metric::EO, Metric::Accuracy, Metric::Sparsity, Metric::Transparency})
    CHECK(member_metric(c, sel, metric, t.ds, rows, "G") == member_metric_serial(c, sel, metric, t.ds, rows, "G"));
  const auto sp = member_metric(c, sel, Metric::Sparsity, t.ds, rows, "G");
  for (std::size_t i = 0; i < sel.size(); ++i)
    CHECK(sp[i] == static_cast<double>(c.members[sel[i]].model.prefix.size()));
  CHECK_THROWS_AS(member_metric(c, sel, Metric::ICD, t.ds, rows, "missing"), MetricError);
}

TEST_CASE("summaries") {
  std::mt19937_64 rng(73);
  std::vector<double> v(37);
  for (auto& x : v) x = std::uniform_real_distribution<double>(0, 1)(rng);
  const auto s = summarize(v);
  CHECK(s.values == v);
  CHECK(s.min == *std::min_element(v.begin(), v.end()));
  CHECK(s.max == *std::max_element(v.begin(), v.end()));
  CHECK(s.q1 == doctest::Approx(testing::sort_quantile(v, 0.25)));
  CHECK(s.median == doctest::Approx(testing::sort_quantile(v, 0.5)));
  CHECK(s.q3 == doctest::Approx(testing::sort_quantile(v, 0.75)));
  CHECK(summarize({0.2, 0.4}).mean == doctest::Approx(0.3));
  CHECK(summarize({0.2, 0.4}).median == doctest::Approx(0.3));
  CHECK_THROWS(summarize({}));
}

TEST_CASE("growth curve is monotone in epsilon") {
  std::mt19937_64 rng(74);
  RashomonCollection c;
  for (int k = 0; k < 60; ++k)
    c.members.push_back(scored(k % 3 ? "L" : "M", static_cast<int>(rng() % 4),
                               std::uniform_real_distribution<double>(0.5, 0.9)(rng)));
  const std::vector<double> eps{0.0, 0.01, 0.05, 0.1, 0.5, 1.0};
  const auto g = growth_curve(c, "L", eps);
  REQUIRE(g.size() == eps.size());
  for (std::size_t k = 1; k < g.size(); ++k)
    for (std::size_t b = 0; b < 4; ++b) CHECK(g[k][b] >= g[k - 1][b]);
  std::size_t total = 0;
  for (auto n : g.back()) total += n;
  CHECK(total == c.select("L").size());
}
