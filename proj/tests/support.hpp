#pragma once

// Shared fixtures and naive reference implementations for the unit and acceptance tests.
// Every oracle here works row by row on plain vectors and never calls the optimized paths.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hicd/data.hpp"
#include "hicd/hybrid.hpp"
#include "hicd/rules.hpp"
#include "hicd/search.hpp"

namespace hicd::testing {

inline IndexList iota_rows(std::size_t n) {
  IndexList r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

inline Bitset bits_of(const std::vector<int>& v) {
  Bitset b(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i]) b.set(i);
  return b;
}

/// Group map for attribute `attribute` from a per-row group index.
inline GroupMap make_groups(const std::string& attribute, const std::vector<std::uint32_t>& assignment,
                            std::size_t n_groups) {
  GroupMap g;
  g.attribute = attribute;
  for (std::size_t k = 0; k < n_groups; ++k) {
    g.names.push_back(std::string(1, static_cast<char>('A' + k)));
    g.members.emplace_back(assignment.size());
  }
  g.group_of = assignment;
  for (std::size_t i = 0; i < assignment.size(); ++i) g.members[assignment[i]].set(i);
  return g;
}

/// Dataset from a row-major 0/1 feature matrix, labels and one group attribute "G".
inline BinaryDataset make_dataset(const std::vector<std::vector<int>>& x, const std::vector<int>& y,
                                  const std::vector<std::uint32_t>& group, std::size_t n_groups) {
  const std::size_t n = y.size();
  const std::size_t m = x.empty() ? 0 : x[0].size();
  std::vector<FeatureInfo> features;
  std::vector<Bitset> bits;
  for (std::size_t f = 0; f < m; ++f) {
    features.push_back({"f" + std::to_string(f) + ":1", "f" + std::to_string(f), "1"});
    Bitset b(n);
    for (std::size_t i = 0; i < n; ++i)
      if (x[i][f]) b.set(i);
    bits.push_back(std::move(b));
  }
  std::vector<GroupMap> groups{make_groups("G", group, n_groups)};
  return BinaryDataset("toy", std::move(features), std::move(bits), bits_of(y), std::move(groups));
}

struct ToyInstance {
  std::vector<std::vector<int>> x;
  std::vector<int> y;
  std::vector<std::uint32_t> group;
  std::size_t n_groups = 2;
  BinaryDataset ds;
};

/// Random instance with duplicated rows (so equivalence classes have conflicting labels) and every
/// group nonempty.
inline ToyInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t n_groups) {
  ToyInstance t;
  t.n_groups = n_groups;
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> pick_group(0, n_groups - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> row(m);
    if (i > 0 && std::bernoulli_distribution(0.3)(rng)) {
      row = t.x[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)];
    } else {
      for (auto& v : row) v = coin(rng) ? 1 : 0;
    }
    t.x.push_back(row);
    // Labels correlate with the first feature so that rules are informative.
    t.y.push_back(std::bernoulli_distribution(row[0] ? 0.75 : 0.3)(rng) ? 1 : 0);
    t.group.push_back(static_cast<std::uint32_t>(i < n_groups ? i : pick_group(rng)));
  }
  t.ds = make_dataset(t.x, t.y, t.group, n_groups);
  return t;
}

inline bool naive_matches(const std::vector<int>& row, const std::vector<Literal>& lits) {
  for (const auto& l : lits)
    if ((row[l.feature] != 0) != l.value) return false;
  return true;
}

/// Hand-built universe of the given conjunctions, supports evaluated row by row.
inline RuleUniverse make_universe(const ToyInstance& t, const IndexList& rows,
                                  const std::vector<std::vector<Literal>>& conjunctions) {
  RuleUniverse u;
  u.n_mining_rows = rows.size();
  for (const auto& lits : conjunctions) {
    Antecedent a;
    a.literals = lits;
    a.id = u.antecedents.size();
    a.support = Bitset(rows.size());
    for (std::size_t p = 0; p < rows.size(); ++p)
      if (naive_matches(t.x[rows[p]], lits)) a.support.set(p);
    u.antecedents.push_back(std::move(a));
  }
  return u;
}

/// Random distinct conjunctions of one or two literals.
inline std::vector<std::vector<Literal>> random_conjunctions(std::mt19937_64& rng, std::size_t m, std::size_t count) {
  std::set<std::vector<Literal>> seen;
  std::vector<std::vector<Literal>> out;
  std::uniform_int_distribution<std::uint32_t> feat(0, static_cast<std::uint32_t>(m - 1));
  std::bernoulli_distribution coin(0.5);
  for (int tries = 0; out.size() < count && tries < 1000; ++tries) {
    std::vector<Literal> lits{{feat(rng), coin(rng)}};
    if (coin(rng)) {
      const Literal second{feat(rng), coin(rng)};
      if (second.feature != lits[0].feature) lits.push_back(second);
    }
    std::sort(lits.begin(), lits.end());
    if (seen.insert(lits).second) out.push_back(lits);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search oracles
// ---------------------------------------------------------------------------

/// incons by exhaustive labeling: every 0/1 assignment to the distinct feature vectors inside
/// `subset`, minimum number of disagreements. Exponential; toy sizes only.
inline std::size_t incons_by_labeling(const ToyInstance& t, const IndexList& rows, const std::vector<bool>& subset) {
  std::vector<std::vector<int>> distinct;
  std::vector<std::size_t> cls(rows.size(), 0);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (!subset[p]) continue;
    const auto& row = t.x[rows[p]];
    auto it = std::find(distinct.begin(), distinct.end(), row);
    cls[p] = static_cast<std::size_t>(it - distinct.begin());
    if (it == distinct.end()) distinct.push_back(row);
  }
  std::size_t best = rows.size() + 1;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << distinct.size()); ++mask) {
    std::size_t errors = 0;
    for (std::size_t p = 0; p < rows.size(); ++p)
      if (subset[p] && (((mask >> cls[p]) & 1U) != static_cast<std::uint64_t>(t.y[rows[p]]))) ++errors;
    best = std::min(best, errors);
  }
  return best;
}

/// incons by grouping identical rows and counting minorities.
inline std::size_t incons_by_grouping(const ToyInstance& t, const IndexList& rows, const std::vector<bool>& subset) {
  std::map<std::vector<int>, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (!subset[p]) continue;
    auto& c = counts[t.x[rows[p]]];
    (t.y[rows[p]] ? c.second : c.first) += 1;
  }
  std::size_t total = 0;
  for (const auto& [row, c] : counts) total += std::min(c.first, c.second);
  return total;
}

struct PrefixEval {
  std::vector<bool> captured;
  std::vector<bool> consequents;
  std::size_t errors = 0;
  std::size_t n_captured = 0;
};

/// Routes every row through the antecedent ids in order, majority consequents per rule.
inline PrefixEval naive_prefix(const ToyInstance& t, const IndexList& rows, const RuleUniverse& u,
                               const std::vector<std::size_t>& ids) {
  PrefixEval e;
  e.captured.assign(rows.size(), false);
  for (std::size_t id : ids) {
    std::size_t pos = 0;
    std::size_t cnt = 0;
    std::vector<std::size_t> fresh;
    for (std::size_t p = 0; p < rows.size(); ++p) {
      if (e.captured[p] || !naive_matches(t.x[rows[p]], u.antecedents[id].literals)) continue;
      fresh.push_back(p);
      ++cnt;
      pos += static_cast<std::size_t>(t.y[rows[p]]);
    }
    const int q = 2 * pos >= cnt ? 1 : 0;
    e.consequents.push_back(q == 1);
    for (std::size_t p : fresh) {
      e.captured[p] = true;
      if (t.y[rows[p]] != q) ++e.errors;
    }
    e.n_captured += cnt;
  }
  return e;
}

/// Prefix over universe ids with the consequents chosen by naive_prefix.
inline Prefix prefix_of(const ToyInstance& t, const IndexList& rows, const RuleUniverse& u,
                        const std::vector<std::size_t>& ids) {
  const PrefixEval e = naive_prefix(t, rows, u, ids);
  Prefix p;
  for (std::size_t k = 0; k < ids.size(); ++k) p.rules.push_back({u.antecedents[ids[k]], e.consequents[k]});
  return p;
}

inline double naive_icd(const ToyInstance& t, const IndexList& rows, const std::vector<bool>& captured) {
  std::vector<std::size_t> num(t.n_groups, 0);
  std::vector<std::size_t> den(t.n_groups, 0);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const auto g = t.group[rows[p]];
    ++den[g];
    if (captured[p]) ++num[g];
  }
  double lo = 2.0;
  double hi = -1.0;
  for (std::size_t g = 0; g < t.n_groups; ++g) {
    if (den[g] == 0) continue;
    const double r = static_cast<double>(num[g]) / static_cast<double>(den[g]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

inline double oracle_objective(const ToyInstance& t, const IndexList& rows, const PrefixEval& e, std::size_t len,
                               const SearchConfig& cfg, SearchMode mode, const std::vector<int>& bb) {
  const std::size_t n = rows.size();
  std::size_t rest = 0;
  if (mode == SearchMode::Pre) {
    std::vector<bool> outside(n);
    for (std::size_t p = 0; p < n; ++p) outside[p] = !e.captured[p];
    rest = incons_by_grouping(t, rows, outside);
  } else {
    for (std::size_t p = 0; p < n; ++p)
      if (!e.captured[p] && bb[p] != t.y[rows[p]]) ++rest;
  }
  return static_cast<double>(e.errors + rest) / static_cast<double>(n) + cfg.lambda * static_cast<double>(len) +
         cfg.beta * (static_cast<double>(n - e.n_captured) / static_cast<double>(n));
}

/// Minimum objective over every feasible nonempty ordered prefix of distinct antecedents with
/// length <= max_prefix_len, plus the constant-true prefix (always feasible).
inline double exhaustive_minimum(const ToyInstance& t, const IndexList& rows, const RuleUniverse& u,
                                 const SearchConfig& cfg, SearchMode mode, const std::vector<int>& bb) {
  const std::size_t n = rows.size();
  // Constant-majority prefix: one rule capturing everything.
  PrefixEval all;
  all.captured.assign(n, true);
  all.n_captured = n;
  std::size_t pos = 0;
  for (std::size_t p = 0; p < n; ++p) pos += static_cast<std::size_t>(t.y[rows[p]]);
  all.errors = 2 * pos >= n ? n - pos : pos;
  double best = oracle_objective(t, rows, all, 1, cfg, mode, bb);

  std::vector<std::size_t> ids;
  std::vector<bool> used(u.size(), false);
  auto feasible = [&](const PrefixEval& e) {
    const double tr = static_cast<double>(e.n_captured) / static_cast<double>(n);
    if (tr < cfg.c_min) return false;
    if (cfg.attribute && naive_icd(t, rows, e.captured) > cfg.eta) return false;
    return true;
  };
  auto rec = [&](auto&& self) -> void {
    const PrefixEval e = naive_prefix(t, rows, u, ids);
    if (!ids.empty() && feasible(e)) best = std::min(best, oracle_objective(t, rows, e, ids.size(), cfg, mode, bb));
    if (ids.size() >= cfg.max_prefix_len) return;
    for (std::size_t a = 0; a < u.size(); ++a) {
      if (used[a]) continue;
      used[a] = true;
      ids.push_back(a);
      self(self);
      ids.pop_back();
      used[a] = false;
    }
  };
  rec(rec);
  return best;
}

// ---------------------------------------------------------------------------
// Metric oracles
// ---------------------------------------------------------------------------

/// max - min over groups of num/den, skipping groups with den = 0.
inline double naive_gap(const std::vector<std::size_t>& num, const std::vector<std::size_t>& den) {
  double lo = 2.0;
  double hi = -1.0;
  for (std::size_t g = 0; g < num.size(); ++g) {
    if (den[g] == 0) continue;
    const double r = static_cast<double>(num[g]) / static_cast<double>(den[g]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi < 0 ? 0.0 : hi - lo;
}

inline double naive_sp(const std::vector<int>& pred, const std::vector<std::uint32_t>& group, std::size_t k) {
  std::vector<std::size_t> num(k, 0), den(k, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++den[group[i]];
    num[group[i]] += static_cast<std::size_t>(pred[i]);
  }
  return naive_gap(num, den);
}

inline double naive_eo(const std::vector<int>& pred, const std::vector<int>& y, const std::vector<std::uint32_t>& group,
                       std::size_t k) {
  std::vector<std::size_t> num(k, 0), den(k, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!y[i]) continue;
    ++den[group[i]];
    num[group[i]] += static_cast<std::size_t>(pred[i]);
  }
  return naive_gap(num, den);
}

/// Fraction of capture vectors containing position p.
inline double naive_icf(const std::vector<std::vector<int>>& captures, std::size_t p) {
  std::size_t c = 0;
  for (const auto& cap : captures) c += static_cast<std::size_t>(cap[p]);
  return static_cast<double>(c) / static_cast<double>(captures.size());
}

inline double naive_ica(double f) { return 1.0 - 2.0 * std::fabs(f - 0.5); }

// ---------------------------------------------------------------------------
// Statistics oracles
// ---------------------------------------------------------------------------

/// Two-sided exact Mann-Whitney p by enumerating every split of the pooled sample into groups of
/// sizes |a| and |b|. U is recomputed from pairwise comparisons (ties count 1/2), and the p-value
/// is the share of splits at least as far from the null mean as the observed U.
inline double permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n1 = a.size();
  const std::size_t n = pooled.size();
  auto u_of = [&](std::uint32_t mask) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!((mask >> i) & 1U)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if ((mask >> j) & 1U) continue;
        if (pooled[i] > pooled[j]) u += 1.0;
        if (pooled[i] == pooled[j]) u += 0.5;
      }
    }
    return u;
  };
  const double mean = static_cast<double>(n1) * static_cast<double>(n - n1) / 2.0;
  const std::uint32_t observed = (std::uint32_t{1} << n1) - 1;
  const double dev = std::fabs(u_of(observed) - mean);
  std::size_t total = 0;
  std::size_t extreme = 0;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != n1) continue;
    ++total;
    if (std::fabs(u_of(mask) - mean) >= dev - 1e-9) ++extreme;
  }
  return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(total));
}

/// Linear-interpolation quantile over a sorted copy.
inline double sort_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace hicd::testing
