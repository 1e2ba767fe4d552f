#include <doctest.h>

#include "hicd/stats.hpp"
#include "support.hpp"

using namespace hicd::stats;
using Dir = Direction;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double shift, bool ties) {
  std::vector<double> v(n);
  for (auto& x : v) {
    x = std::normal_distribution<double>(shift, 1.0)(rng);
    if (ties) x = std::round(x * 2.0) / 2.0;
  }
  return v;
}

}  // namespace

TEST_CASE("small exact examples") {
  const std::vector<double> a{1, 2}, b{3, 4};
  const auto r = mann_whitney_u(a, b);
  CHECK(r.u == 0.0);
  CHECK(r.exact);
  CHECK(r.p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const std::vector<double> same{0.3, 0.1, 0.2, 0.2};
  CHECK(mann_whitney_u(same, same).p == 1.0);
  const std::vector<double> c{5, 5, 5}, d{5, 5};
  CHECK(mann_whitney_u(c, d).p == 1.0);
  CHECK(mann_whitney_u(c, d, 0).p == 1.0);
  CHECK_THROWS(mann_whitney_u(std::vector<double>{}, d));
}

TEST_CASE("exact p matches permutation enumeration for all sizes up to 12") {
  std::mt19937_64 rng(80);
  for (std::size_t na = 1; na <= 11; ++na)
    for (std::size_t nb = 1; na + nb <= 12; ++nb)
      for (int trial = 0; trial < 3; ++trial) {
        const bool ties = trial != 0;
        const auto a = draw(rng, na, 0.0, ties);
        const auto b = draw(rng, nb, trial == 2 ? 1.0 : 0.3, ties);
        const double expected = hicd::testing::permutation_p(a, b);
        CHECK(mann_whitney_exact_p(a, b) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(mann_whitney_u(a, b).p == doctest::Approx(expected).epsilon(1e-12));
      }
}

TEST_CASE("asymptotic p matches a reference implementation") {
  // Reference values: scipy.stats.mannwhitneyu(a, b, method='asymptotic', use_continuity=True).
  struct Case {
    std::vector<double> a, b;
    double u, p;
  };
  const std::vector<Case> cases{
      {{1.5, 2.5, 3.1, 4.7, 5.2, 6.0, 7.3, 8.8, 9.1, 10.4, 11.0},
       {2.2, 3.3, 6.6, 12.0, 13.5, 14.1, 15.2, 16.0, 17.7, 18.9, 19.5},
       23.0,
       0.015115269356493486},
      {{0.1, 0.2, 0.2, 0.3, 0.3, 0.3, 0.5, 0.7, 0.9, 0.9, 1.0, 1.1},
       {0.2, 0.3, 0.4, 0.4, 0.6, 0.8, 0.9, 1.2, 1.3, 1.3, 1.4},
       41.5,
       0.13768948811457937},
      {{5, 5, 5, 5, 5, 5, 5, 5, 6, 6, 6, 6, 6, 6}, {5, 5, 5, 5, 5, 7, 7, 7, 7, 7, 7, 7, 7, 7}, 50.0, 0.018460130548088993},
  };
  for (const auto& c : cases) {
    const auto r = mann_whitney_u(c.a, c.b);
    CHECK_FALSE(r.exact);
    CHECK(r.u == c.u);
    CHECK(r.p == doctest::Approx(c.p).epsilon(1e-9));
  }
}

TEST_CASE("symmetry and agreement between exact and normal p") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = draw(rng, 15, 0.0, trial % 2 == 0);
    const auto b = draw(rng, 15, 0.5, trial % 2 == 0);
    const auto ab = mann_whitney_u(a, b);
    const auto ba = mann_whitney_u(b, a);
    CHECK(ab.u + ba.u == doctest::Approx(225.0));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
    const double exact = mann_whitney_exact_p(a, b);
    CHECK(std::abs(exact - ab.p) <= 0.02);
  }
}

TEST_CASE("Holm adjustment") {
  const auto h = holm_adjust(std::vector<double>{0.01, 0.04, 0.03});
  REQUIRE(h.size() == 3);
  CHECK(h[0] == doctest::Approx(0.03));
  CHECK(h[1] == doctest::Approx(0.06));
  CHECK(h[2] == doctest::Approx(0.06));
  CHECK(holm_adjust(std::vector<double>{0.2}) == std::vector<double>{0.2});
  CHECK(holm_adjust(std::vector<double>{1, 1, 1, 1}) == std::vector<double>{1, 1, 1, 1});
  CHECK(holm_adjust(std::vector<double>{}).empty());
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(1 + rng() % 8);
    for (auto& x : p) x = std::uniform_real_distribution<double>(0, 0.3)(rng);
    const auto adj = holm_adjust(p);
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return p[i] < p[j]; });
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(adj[k] >= p[k]);
      CHECK(adj[k] <= 1.0);
      if (k > 0) CHECK(adj[order[k]] >= adj[order[k - 1]]);
    }
  }
}

TEST_CASE("transitions") {
  std::mt19937_64 rng(83);
  const auto base = draw(rng, 30, 0.0, false);
  auto flat = classify_transitions({base, base, base, base});
  for (const auto& v : flat) {
    CHECK(v.direction == Dir::Flat);
    CHECK(v.p_adjusted >= v.p_raw);
  }
  std::array<std::vector<double>, 4> bell{draw(rng, 30, 0.0, false), draw(rng, 30, 5.0, false),
                                          draw(rng, 30, 5.0, false), draw(rng, 30, 0.0, false)};
  const auto v = classify_transitions(bell);
  CHECK(v[0].direction == Dir::Up);
  CHECK(v[1].direction == Dir::Flat);
  CHECK(v[2].direction == Dir::Down);
  for (auto& bin : bell) std::shuffle(bin.begin(), bin.end(), rng);
  const auto shuffled = classify_transitions(bell);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(shuffled[t].direction == v[t].direction);
    CHECK(shuffled[t].p_adjusted == v[t].p_adjusted);
  }
  bell[2].clear();
  const auto gap = classify_transitions(bell);
  CHECK(gap[0].direction == Dir::Up);
  CHECK(gap[1].direction == Dir::Undefined);
  CHECK(gap[2].direction == Dir::Undefined);
  CHECK(gap[0].p_adjusted == doctest::Approx(gap[0].p_raw));
}

TEST_CASE("bell-like classification and prevalence") {
  using V = std::vector<Dir>;
  CHECK(is_bell_like(V{Dir::Up, Dir::Flat, Dir::Down}));
  CHECK_FALSE(is_bell_like(V{Dir::Down, Dir::Up, Dir::Flat}));
  CHECK_FALSE(is_bell_like(V{Dir::Flat, Dir::Flat, Dir::Flat}));
  CHECK(is_bell_like(V{Dir::Flat, Dir::Up, Dir::Up}));
  CHECK(is_bell_like(V{Dir::Undefined, Dir::Up, Dir::Down}));
  CHECK_FALSE(is_bell_like(V{Dir::Undefined, Dir::Undefined, Dir::Undefined}));
  const auto p = bell_prevalence({V{Dir::Up, Dir::Flat, Dir::Down}, V{Dir::Down, Dir::Up, Dir::Flat},
                                  V{Dir::Flat, Dir::Flat, Dir::Flat}, V{Dir::Up, Dir::Down, Dir::Down}});
  CHECK(p.settings == 4);
  CHECK(p.bell == 2);
  CHECK(p.bell_fraction == 0.5);
  CHECK(p.mixed_fraction == 0.5);
  CHECK_THROWS(bell_prevalence({}));
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == 2.5);
}
