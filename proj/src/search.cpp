#include "hicd/search.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <bit>
#include <chrono>
#include <cmath>
#include <queue>
#include <unordered_map>

namespace hicd {

using nlohmann::json;

std::string to_string(SearchMode m) { return m == SearchMode::Pre ? "pre" : "post"; }

void SearchConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be >= 0");
  if (!(c_min >= 0.0 && c_min <= 1.0)) throw std::invalid_argument("c_min must lie in [0, 1]");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (max_prefix_len == 0) throw std::invalid_argument("max_prefix_len must be >= 1");
}

std::vector<std::uint32_t> equivalence_classes(const BinaryDataset& ds, std::span<const std::size_t> rows) {
  const std::size_t words = (ds.n_features() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> keys(rows.size(), std::vector<std::uint64_t>(words, 0));
  for (std::size_t f = 0; f < ds.n_features(); ++f) {
    const Bitset& col = ds.feature(f);
    for (std::size_t p = 0; p < rows.size(); ++p)
      if (col.test(rows[p])) keys[p][f / 64] |= std::uint64_t{1} << (f % 64);
  }
  struct KeyHash {
    std::size_t operator()(const std::vector<std::uint64_t>& k) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ULL;
      for (auto w : k) h = (h ^ w) * 0x100000001b3ULL + (h >> 29);
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::vector<std::uint64_t>, std::uint32_t, KeyHash> ids;
  std::vector<std::uint32_t> out(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) {
    auto [it, inserted] = ids.try_emplace(keys[p], static_cast<std::uint32_t>(ids.size()));
    out[p] = it->second;
  }
  return out;
}

namespace {

Bitset labels_of(const BinaryDataset& ds, std::span<const std::size_t> rows) {
  Bitset y(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    if (ds.label(rows[p])) y.set(p);
  return y;
}

std::size_t n_classes(const std::vector<std::uint32_t>& cls) {
  std::uint32_t m = 0;
  for (auto c : cls) m = std::max(m, c + 1);
  return m;
}

// Marks, for every class, exactly min(#pos, #neg) positions carrying the minority label.
Bitset incons_marker(const std::vector<std::uint32_t>& cls, const Bitset& y) {
  const std::size_t k = n_classes(cls);
  std::vector<std::size_t> pos(k, 0);
  std::vector<std::size_t> neg(k, 0);
  for (std::size_t p = 0; p < cls.size(); ++p) (y.test(p) ? pos : neg)[cls[p]]++;
  Bitset marker(cls.size());
  for (std::size_t p = 0; p < cls.size(); ++p) {
    const auto c = cls[p];
    const bool minority_label = pos[c] < neg[c];
    if (y.test(p) == minority_label && std::min(pos[c], neg[c]) > 0) marker.set(p);
  }
  // Equal counts mark every row of one label, which is still min(pos, neg) rows.
  return marker;
}

// Per class, marks min(#black-box errors, minority count) of the black-box-error positions.
Bitset post_floor_marker(const std::vector<std::uint32_t>& cls, const Bitset& y, const Bitset& bb_wrong) {
  const std::size_t k = n_classes(cls);
  std::vector<std::size_t> pos(k, 0);
  std::vector<std::size_t> neg(k, 0);
  std::vector<std::size_t> wrong(k, 0);
  for (std::size_t p = 0; p < cls.size(); ++p) {
    (y.test(p) ? pos : neg)[cls[p]]++;
    if (bb_wrong.test(p)) wrong[cls[p]]++;
  }
  std::vector<std::size_t> quota(k);
  for (std::size_t c = 0; c < k; ++c) quota[c] = std::min({wrong[c], pos[c], neg[c]});
  Bitset marker(cls.size());
  for (std::size_t p = 0; p < cls.size(); ++p) {
    if (!bb_wrong.test(p) || quota[cls[p]] == 0) continue;
    --quota[cls[p]];
    marker.set(p);
  }
  return marker;
}

std::size_t errors_of_rules(const std::vector<Bitset>& per_rule, const Prefix& p, const Bitset& y) {
  std::size_t err = 0;
  for (std::size_t r = 0; r < per_rule.size(); ++r) {
    const std::size_t cnt = per_rule[r].count();
    const std::size_t pos = Bitset::count_and(per_rule[r], y);
    err += p.rules[r].consequent ? cnt - pos : pos;
  }
  return err;
}

void check_rows(const BinaryDataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) throw SearchError("empty training sample");
  for (auto r : rows)
    if (r >= ds.n()) throw SearchError("training sample index outside dataset");
}

}  // namespace

std::size_t incons(const BinaryDataset& ds, std::span<const std::size_t> rows, const Bitset& subset) {
  if (subset.size() != rows.size()) throw std::invalid_argument("incons: subset not aligned with rows");
  const auto cls = equivalence_classes(ds, rows);
  const std::size_t k = n_classes(cls);
  std::vector<std::size_t> pos(k, 0);
  std::vector<std::size_t> neg(k, 0);
  subset.for_each_set([&](std::size_t p) { (ds.label(rows[p]) ? pos : neg)[cls[p]]++; });
  std::size_t total = 0;
  for (std::size_t c = 0; c < k; ++c) total += std::min(pos[c], neg[c]);
  return total;
}

bool best_consequent(const Bitset& labels, const Bitset& captured) {
  const std::size_t cnt = captured.count();
  const std::size_t pos = Bitset::count_and(captured, labels);
  return 2 * pos >= cnt;
}

std::size_t prefix_errors(const Prefix& p, const BinaryDataset& ds, std::span<const std::size_t> rows) {
  return errors_of_rules(p.per_rule_capture(ds, rows), p, labels_of(ds, rows));
}

double objective_pre(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                     const SearchConfig& cfg) {
  check_rows(ds, rows);
  const Bitset cap = p.capture(ds, rows);
  const std::size_t err = prefix_errors(p, ds, rows);
  const std::size_t inc = incons(ds, rows, ~cap);
  return compose_objective(err + inc, p.size(), rows.size() - cap.count(), rows.size(), cfg);
}

double objective_post(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                      const Bitset& bb_predictions, const SearchConfig& cfg) {
  check_rows(ds, rows);
  if (bb_predictions.size() != rows.size()) throw std::invalid_argument("black-box predictions not aligned with rows");
  const Bitset cap = p.capture(ds, rows);
  const std::size_t err = prefix_errors(p, ds, rows);
  const Bitset wrong = bb_predictions ^ labels_of(ds, rows);
  const std::size_t bb_err = Bitset::count_and_not(wrong, cap);
  return compose_objective(err + bb_err, p.size(), rows.size() - cap.count(), rows.size(), cfg);
}

double lower_bound(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                   const SearchConfig& cfg, SearchMode mode, const Bitset* bb_predictions) {
  check_rows(ds, rows);
  const Bitset cap = p.capture(ds, rows);
  const std::size_t err = prefix_errors(p, ds, rows);
  const auto cls = equivalence_classes(ds, rows);
  const Bitset y = labels_of(ds, rows);
  Bitset marker;
  if (mode == SearchMode::Pre) {
    marker = incons_marker(cls, y);
  } else {
    if (!bb_predictions || bb_predictions->size() != rows.size())
      throw std::invalid_argument("post-mode bound needs black-box predictions aligned with rows");
    marker = post_floor_marker(cls, y, *bb_predictions ^ y);
  }
  return compose_bound(err + Bitset::count_and_not(marker, cap), p.size(), rows.size(), cfg);
}

double prefix_icd(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& p,
                  const std::string& attribute) {
  return icd_of_capture(p.capture(ds, rows), ds, rows, attribute);
}

Prefix majority_prefix(const BinaryDataset& ds, std::span<const std::size_t> rows) {
  check_rows(ds, rows);
  const Bitset y = labels_of(ds, rows);
  Prefix p;
  Rule r;
  r.consequent = best_consequent(y, Bitset(rows.size(), true));
  p.rules.push_back(std::move(r));
  return p;
}

// ---------------------------------------------------------------------------

SampleIndex::SampleIndex(const BinaryDataset& ds, std::span<const std::size_t> rows, const RuleUniverse& universe,
                         const Bitset* bb_predictions, const std::optional<std::string>& attribute)
    : n_(rows.size()) {
  check_rows(ds, rows);
  labels_ = labels_of(ds, rows);
  supports_.reserve(universe.size());
  for (const auto& a : universe.antecedents) supports_.push_back(a.evaluate(ds, rows));
  const auto cls = equivalence_classes(ds, rows);
  incons_marker_ = incons_marker(cls, labels_);
  if (bb_predictions) {
    if (bb_predictions->size() != n_) throw std::invalid_argument("black-box predictions not aligned with rows");
    has_bb_ = true;
    bb_wrong_ = *bb_predictions ^ labels_;
    post_floor_ = post_floor_marker(cls, labels_, bb_wrong_);
  } else {
    bb_wrong_ = Bitset(n_);
    post_floor_ = Bitset(n_);
  }
  if (attribute) {
    const GroupMap& gm = ds.group_map(*attribute);
    std::vector<Bitset> groups(gm.size(), Bitset(n_));
    for (std::size_t p = 0; p < n_; ++p) groups[gm.group_of[rows[p]]].set(p);
    for (auto& g : groups) {
      const std::size_t c = g.count();
      if (c == 0) continue;
      group_sizes_.push_back(c);
      groups_.push_back(std::move(g));
    }
    if (groups_.size() < 2) {
      throw MetricError("ICD undefined: attribute '" + *attribute +
                        "' has fewer than 2 nonempty groups on the training sample");
    }
  }
}

double SampleIndex::icd(const Bitset& cap) const {
  if (groups_.empty()) return 0.0;
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const double v = static_cast<double>(Bitset::count_and(cap, groups_[g])) / static_cast<double>(group_sizes_[g]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

SampleIndex::Evaluation SampleIndex::evaluate(std::span<const std::uint32_t> antecedents) const {
  Evaluation e;
  e.capture = Bitset(n_);
  for (auto a : antecedents) {
    Bitset fresh = supports_.at(a);
    fresh.and_not(e.capture);
    const std::size_t cnt = fresh.count();
    const std::size_t pos = Bitset::count_and(fresh, labels_);
    const bool q = 2 * pos >= cnt;
    e.errors += q ? cnt - pos : pos;
    e.consequents.push_back(q);
    e.capture |= fresh;
  }
  return e;
}

double SampleIndex::objective(const Evaluation& e, std::size_t length, const SearchConfig& cfg,
                              SearchMode mode) const {
  const std::size_t rest = mode == SearchMode::Pre ? incons_outside(e.capture) : bb_errors_outside(e.capture);
  return compose_objective(e.errors + rest, length, n_ - e.capture.count(), n_, cfg);
}

// ---------------------------------------------------------------------------

namespace {

struct Node {
  std::vector<std::uint32_t> rules;
  std::vector<bool> consequents;
  std::size_t err = 0;  // prefix errors on captured positions
  double lb = 0.0;
  std::uint64_t order = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.lb != b.lb) return a.lb > b.lb;
    return a.order > b.order;
  }
};

struct ParetoEntry {
  std::size_t err;
  std::size_t len;
};

struct Fingerprint {
  std::uint64_t a;
  std::uint64_t b;
  bool operator==(const Fingerprint&) const = default;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const { return static_cast<std::size_t>(f.a); }
};

inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

Prefix materialize(const RuleUniverse& u, const std::vector<std::uint32_t>& ids, const std::vector<bool>& q) {
  Prefix p;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Rule r;
    r.antecedent = u.antecedents[ids[i]];
    r.consequent = q[i];
    p.rules.push_back(std::move(r));
  }
  return p;
}

json ids_json(const std::vector<std::uint32_t>& ids) {
  json a = json::array();
  for (auto i : ids) a.push_back(i);
  return a;
}

}  // namespace

constexpr std::size_t kBeamWidth = 16;

SearchResult search(const BinaryDataset& ds, std::span<const std::size_t> rows, const RuleUniverse& universe,
                    const SearchConfig& cfg, SearchMode mode, const Bitset* bb_predictions, const Prefix& initial) {
  cfg.validate();
  check_rows(ds, rows);
  if (mode == SearchMode::Post && !bb_predictions) throw SearchError("post mode needs black-box predictions");
  if (mode == SearchMode::Pre) bb_predictions = nullptr;
  if (initial.empty()) throw SearchError("initial prefix is empty");
  const auto t0 = std::chrono::steady_clock::now();

  const SampleIndex idx(ds, rows, universe, bb_predictions, cfg.attribute);
  const std::size_t n = idx.n();

  SearchResult res;

  // Incumbent.
  const Bitset init_cap = initial.capture(ds, rows);
  const double init_t = static_cast<double>(init_cap.count()) / static_cast<double>(n);
  const double init_icd = idx.icd(init_cap);
  if (init_t < cfg.c_min || init_icd > cfg.eta) {
    throw SearchError("initial prefix is infeasible (transparency " + std::to_string(init_t) + ", ICD " +
                      std::to_string(init_icd) + ")");
  }
  {
    const std::size_t err = errors_of_rules(initial.per_rule_capture(ds, rows), initial, idx.labels());
    const std::size_t rest =
        mode == SearchMode::Pre ? incons(ds, rows, ~init_cap) : idx.bb_errors_outside(init_cap);
    res.objective = compose_objective(err + rest, initial.size(), n - init_cap.count(), n, cfg);
  }
  res.prefix = initial;
  res.transparency = init_t;
  res.icd = init_icd;
  double zc = res.objective;
  res.log.push_back({{"event", "init"}, {"objective", zc}, {"transparency", init_t}, {"icd", init_icd}});

  // Beam dive for a warm incumbent. Half the beam ranks by objective, half by objective plus the
  // shortfall against the constraints.
  {
    struct Beam {
      double z = 0.0;
      double penalized = 0.0;
      std::vector<std::uint32_t> ids;
      std::vector<bool> consequents;
      Bitset cap;
      std::size_t err = 0;
    };
    std::vector<Beam> beam(1);
    beam[0].cap = Bitset(n);
    for (std::size_t depth = 0; depth < cfg.max_prefix_len && !beam.empty(); ++depth) {
      std::vector<Beam> next;
      for (const auto& b : beam) {
        const std::size_t before = b.cap.count();
        for (std::uint32_t a = 0; a < idx.n_antecedents(); ++a) {
          if (std::find(b.ids.begin(), b.ids.end(), a) != b.ids.end()) continue;
          const std::size_t cnt = Bitset::count_and_not(idx.support(a), b.cap);
          if (cnt == 0) continue;
          const std::size_t pos = Bitset::count_and_and_not(idx.support(a), idx.labels(), b.cap);
          Beam c;
          c.ids = b.ids;
          c.ids.push_back(a);
          c.consequents = b.consequents;
          c.consequents.push_back(2 * pos >= cnt);
          c.err = b.err + (2 * pos >= cnt ? cnt - pos : pos);
          c.cap = b.cap;
          c.cap |= idx.support(a);
          const std::size_t captured = before + cnt;
          const std::size_t rest = mode == SearchMode::Pre ? idx.incons_outside(c.cap) : idx.bb_errors_outside(c.cap);
          c.z = compose_objective(c.err + rest, c.ids.size(), n - captured, n, cfg);
          const double t = static_cast<double>(captured) / static_cast<double>(n);
          const double d = idx.icd(c.cap);
          if (c.z < zc && t >= cfg.c_min && d <= cfg.eta) {
            zc = c.z;
            res.objective = c.z;
            res.prefix = materialize(universe, c.ids, c.consequents);
            res.transparency = t;
            res.icd = d;
            ++res.stats.incumbent_updates;
            res.log.push_back({{"event", "incumbent"},
                               {"expanded", 0},
                               {"objective", c.z},
                               {"transparency", t},
                               {"icd", d},
                               {"rules", ids_json(c.ids)}});
          }
          c.penalized = c.z + std::max(0.0, cfg.c_min - t) + std::max(0.0, d - cfg.eta);
          next.push_back(std::move(c));
        }
      }
      std::vector<Beam> kept;
      std::vector<bool> taken(next.size(), false);
      for (int pass = 0; pass < 2; ++pass) {
        std::vector<std::size_t> order(next.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t keep = std::min(order.size(), kBeamWidth / 2);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](std::size_t x, std::size_t y) {
                            const double kx = pass == 0 ? next[x].z : next[x].penalized;
                            const double ky = pass == 0 ? next[y].z : next[y].penalized;
                            return kx < ky || (kx == ky && x < y);
                          });
        for (std::size_t i = 0; i < keep; ++i) {
          if (!taken[order[i]]) {
            taken[order[i]] = true;
            kept.push_back(next[order[i]]);
          }
        }
      }
      beam = std::move(kept);
    }
  }

  const Bitset& floor_marker = mode == SearchMode::Pre ? idx.incons_marker_ref() : idx.post_floor_ref();

  std::priority_queue<Node, std::vector<Node>, NodeOrder> queue;
  std::unordered_map<Fingerprint, std::vector<ParetoEntry>, FingerprintHash> seen;
  std::uint64_t order = 0;
  std::size_t node_bytes = 0;
  std::size_t map_bytes = 0;

  {
    Node root;
    root.lb = compose_bound(Bitset::count_and_not(floor_marker, Bitset(n)), 0, n, cfg);
    root.order = order++;
    queue.push(std::move(root));
    res.stats.pushed = 1;
  }

  auto capture_of = [&](const std::vector<std::uint32_t>& ids) {
    Bitset cap(n);
    for (auto a : ids) cap |= idx.support(a);
    return cap;
  };

  while (!queue.empty()) {
    if (cfg.max_nodes > 0 && res.stats.expanded >= cfg.max_nodes) {
      res.optimal = false;
      res.stop_reason = "node limit";
      break;
    }
    if ((res.stats.expanded & 63U) == 0 && cfg.time_limit > 0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (el > cfg.time_limit) {
        res.optimal = false;
        res.stop_reason = "time limit";
        break;
      }
    }
    if (node_bytes + map_bytes > cfg.memory_limit) {
      res.optimal = false;
      res.stop_reason = "memory limit";
      break;
    }

    Node node = queue.top();
    queue.pop();
    node_bytes -= std::min(node_bytes, sizeof(Node) + node.rules.size() * 5);
    if (!(node.lb < zc)) {
      ++res.stats.pruned_bound;
      continue;
    }
    ++res.stats.expanded;

    const Bitset cap = capture_of(node.rules);
    const std::size_t captured = cap.count();
    const std::size_t len = node.rules.size();
    const std::size_t rest = mode == SearchMode::Pre ? idx.incons_outside(cap) : idx.bb_errors_outside(cap);
    const double z = compose_objective(node.err + rest, len, n - captured, n, cfg);
    if (len > 0 && z < zc) {
      const double t = static_cast<double>(captured) / static_cast<double>(n);
      const double d = idx.icd(cap);
      if (t >= cfg.c_min && d <= cfg.eta) {
        zc = z;
        res.objective = z;
        res.prefix = materialize(universe, node.rules, node.consequents);
        res.transparency = t;
        res.icd = d;
        ++res.stats.incumbent_updates;
        res.log.push_back({{"event", "incumbent"},
                           {"expanded", res.stats.expanded},
                           {"objective", z},
                           {"transparency", t},
                           {"icd", d},
                           {"rules", ids_json(node.rules)}});
      }
    }
    if (len >= cfg.max_prefix_len) continue;

    const auto cw = cap.words();
    const auto yw = idx.labels().words();
    const auto fw = floor_marker.words();
    for (std::uint32_t a = 0; a < idx.n_antecedents(); ++a) {
      if (std::find(node.rules.begin(), node.rules.end(), a) != node.rules.end()) continue;
      const auto sw = idx.support(a).words();
      std::size_t cnt = 0;
      std::size_t pos = 0;
      std::size_t floor_out = 0;
      Fingerprint fp{0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL};
      for (std::size_t w = 0; w < cw.size(); ++w) {
        const std::uint64_t fresh = sw[w] & ~cw[w];
        const std::uint64_t u = sw[w] | cw[w];
        cnt += static_cast<std::size_t>(std::popcount(fresh));
        pos += static_cast<std::size_t>(std::popcount(fresh & yw[w]));
        floor_out += static_cast<std::size_t>(std::popcount(fw[w] & ~u));
        fp.a = fp.a * 0x9e3779b97f4a7c15ULL + u;
        fp.b = (fp.b ^ u) * 0xff51afd7ed558ccdULL;
      }
      fp.a = mix64(fp.a);
      fp.b = mix64(fp.b);
      if (cnt == 0) {
        ++res.stats.useless;
        continue;
      }
      const bool q = 2 * pos >= cnt;
      const std::size_t child_err = node.err + (q ? cnt - pos : pos);
      const double lb = compose_bound(child_err + floor_out, len + 1, n, cfg);
      if (!(lb < zc)) {
        ++res.stats.pruned_bound;
        continue;
      }
      // Capture-set dominance: same capture, no more errors and no more rules.
      auto [slot, fresh_key] = seen.try_emplace(fp);
      auto& front = slot->second;
      if (fresh_key) map_bytes += sizeof(Fingerprint) + sizeof(front) + 48;
      const bool dominated = std::any_of(front.begin(), front.end(), [&](const ParetoEntry& e) {
        return e.err <= child_err && e.len <= len + 1;
      });
      if (dominated) {
        ++res.stats.pruned_symmetry;
        continue;
      }
      std::erase_if(front, [&](const ParetoEntry& e) { return child_err <= e.err && len + 1 <= e.len; });
      front.push_back({child_err, len + 1});
      map_bytes += sizeof(ParetoEntry);
      Node child;
      child.rules = node.rules;
      child.rules.push_back(a);
      child.consequents = node.consequents;
      child.consequents.push_back(q);
      child.err = child_err;
      child.lb = lb;
      child.order = order++;
      node_bytes += sizeof(Node) + child.rules.size() * 5;
      queue.push(std::move(child));
      ++res.stats.pushed;
      res.stats.max_queue = std::max(res.stats.max_queue, queue.size());
    }
  }

  res.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.log.push_back({{"event", "done"},
                     {"optimal", res.optimal},
                     {"stop_reason", res.stop_reason},
                     {"objective", res.objective},
                     {"expanded", res.stats.expanded},
                     {"pushed", res.stats.pushed},
                     {"pruned_bound", res.stats.pruned_bound},
                     {"pruned_symmetry", res.stats.pruned_symmetry},
                     {"seconds", res.stats.seconds}});
  return res;
}

HybridModel finalize_pre(const BinaryDataset& ds, std::span<const std::size_t> rows, const Prefix& prefix,
                         const ForestConfig& forest_cfg, Provenance provenance, std::vector<std::string>* warnings) {
  const Bitset cap = prefix.capture(ds, rows);
  std::vector<std::size_t> rest;
  for (std::size_t p = 0; p < rows.size(); ++p)
    if (!cap.test(p)) rest.push_back(rows[p]);
  HybridModel m;
  m.prefix = prefix;
  m.provenance = std::move(provenance);
  if (rest.empty()) {
    m.blackbox = std::make_shared<ConstantPredictor>(best_consequent(labels_of(ds, rows), Bitset(rows.size(), true)));
  } else {
    m.blackbox = train_forest(ds, rest, forest_cfg, warnings);
  }
  return m;
}

}  // namespace hicd
