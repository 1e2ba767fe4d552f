#include "hicd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace hicd::stats {

namespace {

struct Ranked {
  std::vector<std::int64_t> doubled;  // 2 * midrank, pooled order: a then b
  double tie_term = 0.0;              // sum of t^3 - t over tie groups
};

Ranked rank_pooled(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> v(a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  for (double x : v)
    if (std::isnan(x)) throw std::invalid_argument("mann_whitney_u: NaN in sample");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  Ranked r;
  r.doubled.assign(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // Ranks i+1..j+1 share the midrank (i+j+2)/2.
    const auto d = static_cast<std::int64_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) r.doubled[order[k]] = d;
    const auto t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

void check_sizes(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: both samples must be nonempty");
}

}  // namespace

double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b) {
  check_sizes(a, b);
  const Ranked r = rank_pooled(a, b);
  const std::size_t na = a.size();
  const std::size_t n = r.doubled.size();
  std::int64_t observed = 0;
  for (std::size_t i = 0; i < na; ++i) observed += r.doubled[i];
  // 2U - na*nb = S - na(na+1) - na*nb, with S the doubled rank sum of a.
  const std::int64_t shift = static_cast<std::int64_t>(na * (na + 1) + na * (n - na));
  const std::int64_t obs_dev = std::llabs(observed - shift);

  const std::int64_t max_sum = std::accumulate(r.doubled.begin(), r.doubled.end(), std::int64_t{0});
  // ways[k][s]: subsets of size k with doubled rank sum s.
  std::vector<std::vector<double>> ways(na + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = static_cast<std::size_t>(r.doubled[i]);
    for (std::size_t k = std::min(na, i + 1); k >= 1; --k) {
      auto& dst = ways[k];
      const auto& src = ways[k - 1];
      for (std::size_t s = static_cast<std::size_t>(max_sum); s >= d; --s) {
        dst[s] += src[s - d];
        if (s == d) break;
      }
    }
  }
  double total = 0.0;
  double extreme = 0.0;
  for (std::size_t s = 0; s <= static_cast<std::size_t>(max_sum); ++s) {
    const double w = ways[na][s];
    if (w == 0.0) continue;
    total += w;
    if (std::llabs(static_cast<std::int64_t>(s) - shift) >= obs_dev) extreme += w;
  }
  return std::min(1.0, extreme / total);
}

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t exact_limit) {
  check_sizes(a, b);
  const Ranked r = rank_pooled(a, b);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  const double n = na + nb;
  std::int64_t doubled_sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) doubled_sum += r.doubled[i];
  MannWhitney out;
  out.u = static_cast<double>(doubled_sum) / 2.0 - na * (na + 1.0) / 2.0;
  if (a.size() + b.size() <= exact_limit) {
    out.exact = true;
    out.p = mann_whitney_exact_p(a, b);
    return out;
  }
  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    out.p = 1.0;
    return out;
  }
  const double z = (std::abs(out.u - mu) - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

std::vector<double> holm_adjust(std::span<const double> p) {
  for (double x : p)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("holm_adjust: p-values must lie in [0, 1]");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double v = std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
    running = std::max(running, v);
    out[order[k]] = running;
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2.0;
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::Up:
      return "UP";
    case Direction::Down:
      return "DOWN";
    case Direction::Flat:
      return "FLAT";
    case Direction::Undefined:
      break;
  }
  return "UNDEFINED";
}

std::vector<TransitionVerdict> classify_transitions(const std::array<std::vector<double>, 4>& bins, double alpha) {
  std::vector<TransitionVerdict> out(3);
  std::vector<double> raw;
  std::vector<std::size_t> defined;
  for (std::size_t t = 0; t < 3; ++t) {
    out[t].from = t;
    if (bins[t].empty() || bins[t + 1].empty()) continue;
    const auto mw = mann_whitney_u(bins[t], bins[t + 1]);
    out[t].u = mw.u;
    out[t].p_raw = mw.p;
    raw.push_back(mw.p);
    defined.push_back(t);
  }
  const auto adj = holm_adjust(raw);
  for (std::size_t k = 0; k < defined.size(); ++k) {
    auto& v = out[defined[k]];
    v.p_adjusted = adj[k];
    v.direction = Direction::Flat;
    if (v.p_adjusted <= alpha) {
      const double diff = median(bins[v.from + 1]) - median(bins[v.from]);
      if (diff > 0) v.direction = Direction::Up;
      if (diff < 0) v.direction = Direction::Down;
    }
  }
  return out;
}

bool is_bell_like(std::span<const Direction> seq) {
  std::vector<Direction> s;
  for (auto d : seq)
    if (d != Direction::Undefined) s.push_back(d);
  std::ptrdiff_t last_up = -1;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] == Direction::Up) last_up = static_cast<std::ptrdiff_t>(i);
  if (last_up < 0) return false;
  for (std::ptrdiff_t i = 0; i < last_up; ++i)
    if (s[static_cast<std::size_t>(i)] == Direction::Down) return false;
  return true;
}

Prevalence bell_prevalence(const std::vector<std::vector<Direction>>& table) {
  if (table.empty()) throw std::invalid_argument("bell_prevalence: no settings");
  Prevalence p;
  p.settings = table.size();
  for (const auto& row : table)
    if (is_bell_like(row)) ++p.bell;
  p.bell_fraction = static_cast<double>(p.bell) / static_cast<double>(p.settings);
  p.mixed_fraction = 1.0 - p.bell_fraction;
  return p;
}

}  // namespace hicd::stats
