#include <doctest.h>

#include "hicd/hybrid.hpp"
#include "support.hpp"

using namespace hicd;

namespace {

Rule rule(std::vector<Literal> lits, bool q) {
  Rule r;
  r.antecedent.literals = std::move(lits);
  r.consequent = q;
  return r;
}

HybridModel model_with(std::vector<Rule> rules, PredictorPtr bb) {
  HybridModel m;
  m.prefix.rules = std::move(rules);
  m.blackbox = std::move(bb);
  return m;
}

/// 20 rows: groups A (0..9) and B (10..19); feature 0 set on 8 of A and 2 of B.
BinaryDataset coverage_toy() {
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  std::vector<std::uint32_t> g;
  for (int i = 0; i < 20; ++i) {
    const bool a = i < 10;
    const int local = a ? i : i - 10;
    x.push_back({(a ? local < 8 : local < 2) ? 1 : 0, i % 3 == 0 ? 1 : 0});
    y.push_back(i % 2);
    g.push_back(a ? 0 : 1);
  }
  return testing::make_dataset(x, y, g, 2);
}

}  // namespace

TEST_CASE("capture shadowing and order precedence") {
  const auto ds = testing::make_dataset({{1, 1}, {1, 0}, {0, 1}, {0, 0}}, {0, 0, 0, 0}, {0, 1, 0, 1}, 2);
  const auto zero = std::make_shared<ConstantPredictor>(false);
  const auto m = model_with({rule({{0, true}}, true), rule({{1, true}}, false)}, zero);
  CHECK(predict(m, ds, 0));         // rule 1 wins over rule 2
  CHECK(predict(m, ds, 1));         // rule 1 regardless of black box
  CHECK_FALSE(predict(m, ds, 2));   // rule 2
  CHECK_FALSE(predict(m, ds, 3));   // black box
  const auto route = m.prefix.route(ds, testing::iota_rows(4));
  CHECK(route == std::vector<std::int32_t>{0, 0, 1, -1});
  const auto one = std::make_shared<ConstantPredictor>(true);
  const auto pure = model_with({}, one);
  for (std::size_t i = 0; i < 4; ++i) CHECK(predict(pure, ds, i));
}

TEST_CASE("transparency") {
  const auto ds = coverage_toy();
  const auto rows = testing::iota_rows(10);
  const auto bb = std::make_shared<ConstantPredictor>(false);
  // Rows 0..7 carry feature 0, so 3 of these 10 positions are captured.
  CHECK(transparency(model_with({rule({{0, true}}, true)}, bb), ds, IndexList{0, 1, 2, 8, 9, 9, 9, 9, 9, 9}) ==
        doctest::Approx(0.3));
  CHECK(transparency(model_with({rule({}, true)}, bb), ds, rows) == 1.0);
  CHECK(transparency(model_with({}, bb), ds, rows) == 0.0);
}

TEST_CASE("group coverage and ICD") {
  const auto ds = coverage_toy();
  const auto rows = testing::iota_rows(20);
  const auto bb = std::make_shared<ConstantPredictor>(false);
  const auto m = model_with({rule({{0, true}}, true)}, bb);
  const auto cov = group_coverage(m, ds, rows, "G");
  REQUIRE(cov.size() == 2);
  CHECK(cov[0].rate() == doctest::Approx(0.8));
  CHECK(cov[1].rate() == doctest::Approx(0.2));
  CHECK(icd(m, ds, rows, "G") == doctest::Approx(0.6));
  const auto full = model_with({rule({}, false)}, bb);
  for (const auto& r : group_coverage(full, ds, rows, "G")) CHECK(r.rate() == 1.0);
  CHECK(icd(full, ds, rows, "G") == 0.0);
  CHECK(icd(model_with({}, bb), ds, rows, "G") == 0.0);
}

TEST_CASE("ICD needs two nonempty groups") {
  const auto ds = coverage_toy();
  const auto bb = std::make_shared<ConstantPredictor>(false);
  CHECK_THROWS_AS(icd(model_with({}, bb), ds, testing::iota_rows(10), "G"), MetricError);
}

TEST_CASE("parity and opportunity examples") {
  // Three groups with positive-prediction rates 0.2, 0.5, 0.9.
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  std::vector<std::uint32_t> g;
  std::vector<int> pred;
  const int positives[3] = {2, 5, 9};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 10; ++i) {
      x.push_back({0});
      y.push_back(1);
      g.push_back(static_cast<std::uint32_t>(k));
      pred.push_back(i < positives[k] ? 1 : 0);
    }
  const auto ds = testing::make_dataset(x, y, g, 3);
  const auto rows = testing::iota_rows(30);
  CHECK(statistical_parity(testing::bits_of(pred), ds, rows, "G") == doctest::Approx(0.7));
  CHECK(equal_opportunity(testing::bits_of(y), ds, rows, "G") == 0.0);
  std::vector<int> split_pred(30, 0);
  for (int i = 0; i < 10; ++i) split_pred[static_cast<std::size_t>(i)] = 1;
  const IndexList two(rows.begin(), rows.begin() + 20);
  const Bitset p2 = testing::bits_of(std::vector<int>(split_pred.begin(), split_pred.begin() + 20));
  CHECK(statistical_parity(p2, ds, two, "G") == 1.0);
  CHECK(equal_opportunity(p2, ds, two, "G") == 1.0);
  std::vector<int> half(20);
  for (std::size_t i = 0; i < 20; ++i) half[i] = static_cast<int>(i % 2);
  CHECK(statistical_parity(testing::bits_of(half), ds, two, "G") == 0.0);
}

TEST_CASE("metrics against naive loops on random models") {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = testing::random_instance(rng, 40, 5, 3);
    IndexList rows;
    for (int i = 0; i < 30; ++i) rows.push_back(rng() % 40);
    const auto conj = testing::random_conjunctions(rng, 5, 3);
    std::vector<Rule> rules;
    for (const auto& c : conj) rules.push_back(rule(c, rng() % 2 == 1));
    std::vector<int> bb_all(40);
    for (auto& v : bb_all) v = static_cast<int>(rng() % 2);
    const auto m = model_with(rules, std::make_shared<IndexedPredictor>(testing::bits_of(bb_all)));

    std::vector<int> pred, y, covered;
    std::vector<std::uint32_t> grp;
    for (auto r : rows) {
      int p = bb_all[r];
      int c = 0;
      for (const auto& ru : rules)
        if (testing::naive_matches(t.x[r], ru.antecedent.literals)) {
          p = ru.consequent ? 1 : 0;
          c = 1;
          break;
        }
      pred.push_back(p);
      covered.push_back(c);
      y.push_back(t.y[r]);
      grp.push_back(t.group[r]);
    }
    std::size_t correct = 0, cov = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      correct += pred[i] == y[i] ? 1 : 0;
      cov += static_cast<std::size_t>(covered[i]);
    }
    const Bitset pb = predict_all(m, t.ds, rows);
    CHECK(pb == testing::bits_of(pred));
    CHECK(accuracy(m, t.ds, rows) == doctest::Approx(static_cast<double>(correct) / 30.0).epsilon(1e-12));
    CHECK(transparency(m, t.ds, rows) == doctest::Approx(static_cast<double>(cov) / 30.0).epsilon(1e-12));
    CHECK(statistical_parity(pb, t.ds, rows, "G") == doctest::Approx(testing::naive_sp(pred, grp, 3)));
    CHECK(equal_opportunity(pb, t.ds, rows, "G") == doctest::Approx(testing::naive_eo(pred, y, grp, 3)));
    CHECK(icd(m, t.ds, rows, "G") == doctest::Approx(testing::naive_sp(covered, grp, 3)));
  }
}

TEST_CASE("model JSON round-trip and rendering") {
  std::mt19937_64 rng(31);
  const auto t = testing::random_instance(rng, 50, 4, 2);
  const auto rows = testing::iota_rows(50);
  ForestConfig fc;
  fc.n_trees = 3;
  auto m = model_with({rule({{0, true}}, true), rule({{1, false}, {2, true}}, false)}, train_forest(t.ds, rows, fc));
  m.provenance.method = "post";
  m.provenance.learner = "L";
  m.provenance.run = 4;
  const auto j = model_to_json(m, t.ds, m.blackbox->to_json());
  const auto back = model_from_json(j, t.ds);
  CHECK(back.prefix.same_rules(m.prefix));
  CHECK(predict_all(back, t.ds, rows) == predict_all(m, t.ds, rows));
  CHECK(back.provenance.run == 4);
  const std::string text = render(m.prefix, t.ds);
  CHECK(text.find("if [f0:1] then [1]") == 0);
  CHECK(text.find("else if [not f1:1 && f2:1] then [0]") != std::string::npos);
  CHECK(text.find("else [black-box]") != std::string::npos);
}
