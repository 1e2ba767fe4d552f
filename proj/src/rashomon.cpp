#include "hicd/rashomon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <variant>

#include <omp.h>

namespace hicd {

std::string to_string(Method m) {
  switch (m) {
    case Method::Pre:
      return "pre";
    case Method::Post:
      return "post";
    case Method::AnnealSet:
      return "anneal_set";
    case Method::AnnealList:
      break;
  }
  return "anneal_list";
}

Method method_from_string(const std::string& s) {
  if (s == "pre") return Method::Pre;
  if (s == "post") return Method::Post;
  if (s == "anneal_set") return Method::AnnealSet;
  if (s == "anneal_list") return Method::AnnealList;
  throw std::invalid_argument("unknown method '" + s + "' (expected pre, post, anneal_set or anneal_list)");
}

std::vector<std::string> RashomonCollection::learners() const {
  std::vector<std::string> out;
  for (const auto& m : members)
    if (std::find(out.begin(), out.end(), m.learner) == out.end()) out.push_back(m.learner);
  return out;
}

std::vector<std::size_t> RashomonCollection::select(const std::string& learner, int bin) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i].learner == learner && (bin < 0 || members[i].bin == bin)) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using Outcome = std::variant<Member, Failure>;

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<Outcome> run_one(const BinaryDataset& ds, const SplitSpec& split, const RuleUniverse& universe,
                             const std::vector<LearnerSpec>& specs, const BuildConfig& cfg, std::size_t r) {
  const std::uint64_t sample_seed = derive_seed(cfg.base_seed, r);
  const std::uint64_t bb_seed = derive_seed(cfg.base_seed, r, 1);
  const IndexList sample = r == 0 ? split.train : bootstrap_sample(ds, split.train, sample_seed);
  const IndexList everyone = all_rows(ds.n());
  ForestConfig fcfg = cfg.forest;
  fcfg.seed = bb_seed;

  PredictorPtr shared_forest;
  PredictorPtr shared_stored;
  Bitset shared_on_sample;
  auto ensure_forest = [&] {
    if (shared_forest) return;
    shared_forest = train_forest_serial(ds, sample, fcfg);
    shared_stored = std::make_shared<IndexedPredictor>(shared_forest->predict(ds, everyone));
    shared_on_sample = shared_forest->predict(ds, sample);
  };

  std::vector<Outcome> out;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const LearnerSpec& spec = specs[s];
    try {
      Member m;
      m.learner = spec.learner;
      m.spec = s;
      m.run = r;
      m.id = spec.learner + "/s" + std::to_string(s) + "/r" + std::to_string(r);
      Provenance prov{to_string(spec.method), spec.learner, spec.hyperparameters, sample_seed, r};
      std::optional<std::string> attribute;
      switch (spec.method) {
        case Method::Pre: {
          const auto res = search(ds, sample, universe, spec.search, SearchMode::Pre, nullptr,
                                  majority_prefix(ds, sample));
          HybridModel hm = finalize_pre(ds, sample, res.prefix, fcfg, prov);
          m.model.prefix = res.prefix;
          m.model.blackbox = std::make_shared<IndexedPredictor>(hm.blackbox->predict(ds, everyone));
          m.objective = res.objective;
          m.optimal = res.optimal;
          m.expanded = res.stats.expanded;
          if (cfg.keep_logs) m.log = res.log;
          attribute = spec.search.attribute;
          break;
        }
        case Method::Post: {
          ensure_forest();
          const auto res = search(ds, sample, universe, spec.search, SearchMode::Post, &shared_on_sample,
                                  majority_prefix(ds, sample));
          m.model.prefix = res.prefix;
          m.model.blackbox = shared_stored;
          m.objective = res.objective;
          m.optimal = res.optimal;
          m.expanded = res.stats.expanded;
          if (cfg.keep_logs) m.log = res.log;
          attribute = spec.search.attribute;
          break;
        }
        case Method::AnnealSet:
        case Method::AnnealList: {
          ensure_forest();
          AnnealConfig acfg = spec.anneal;
          acfg.mode = spec.method == Method::AnnealSet ? AnnealMode::Set : AnnealMode::List;
          acfg.seed = derive_seed(bb_seed, s, 2);
          const auto res = anneal_train(ds, sample, universe, shared_forest, acfg);
          m.model.prefix = res.model.prefix;
          m.model.blackbox = shared_stored;
          m.objective = res.objective;
          m.optimal = false;
          if (cfg.keep_logs) m.log = res.log;
          break;
        }
      }
      m.model.provenance = std::move(prov);
      const Bitset cap = m.model.prefix.capture(ds, split.train);
      m.train_transparency = static_cast<double>(cap.count()) / static_cast<double>(split.train.size());
      m.train_accuracy = accuracy(m.model, ds, split.train);
      m.fingerprint = m.model.blackbox->predict(ds, split.train);
      if (attribute) m.sample_icd = prefix_icd(ds, sample, m.model.prefix, *attribute);
      out.emplace_back(std::move(m));
    } catch (const std::exception& e) {
      out.emplace_back(Failure{spec.learner, s, r, e.what()});
    }
  }
  return out;
}

RashomonCollection assemble(std::vector<std::vector<Outcome>>& runs, std::size_t n_specs) {
  RashomonCollection c;
  for (std::size_t s = 0; s < n_specs; ++s) {
    for (auto& run : runs) {
      auto& o = run[s];
      if (auto* m = std::get_if<Member>(&o)) {
        c.members.push_back(std::move(*m));
      } else {
        c.failures.push_back(std::get<Failure>(o));
      }
    }
  }
  return c;
}

void check_build(const SplitSpec& split, const std::vector<LearnerSpec>& specs, const BuildConfig& cfg) {
  if (split.train.empty()) throw std::invalid_argument("build: empty training split");
  if (specs.empty()) throw std::invalid_argument("build: no learner specs");
  cfg.forest.validate();
}

}  // namespace

RashomonCollection build(const BinaryDataset& ds, const SplitSpec& split, const RuleUniverse& universe,
                         const std::vector<LearnerSpec>& specs, const BuildConfig& cfg) {
  check_build(split, specs, cfg);
  const auto n_runs = static_cast<std::int64_t>(cfg.n_bootstrap + 1);
  std::vector<std::vector<Outcome>> runs(static_cast<std::size_t>(n_runs));
  const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t r = 0; r < n_runs; ++r) {
    runs[static_cast<std::size_t>(r)] = run_one(ds, split, universe, specs, cfg, static_cast<std::size_t>(r));
  }
  return assemble(runs, specs.size());
}

RashomonCollection build_serial(const BinaryDataset& ds, const SplitSpec& split, const RuleUniverse& universe,
                                const std::vector<LearnerSpec>& specs, const BuildConfig& cfg) {
  check_build(split, specs, cfg);
  std::vector<std::vector<Outcome>> runs;
  for (std::size_t r = 0; r <= cfg.n_bootstrap; ++r) runs.push_back(run_one(ds, split, universe, specs, cfg, r));
  return assemble(runs, specs.size());
}

// ---------------------------------------------------------------------------

RashomonCollection dedup(const RashomonCollection& c, double agreement_threshold) {
  if (!(agreement_threshold > 0.0 && agreement_threshold <= 1.0))
    throw std::invalid_argument("dedup: agreement threshold must lie in (0, 1]");
  RashomonCollection out;
  out.failures = c.failures;
  out.epsilon = c.epsilon;
  out.bin_reference = c.bin_reference;
  for (const auto& m : c.members) {
    bool dup = false;
    for (const auto& k : out.members) {
      if (k.learner == m.learner && k.model.prefix.same_rules(m.model.prefix) &&
          agreement(k.fingerprint, m.fingerprint) >= agreement_threshold) {
        dup = true;
        break;
      }
    }
    if (!dup) out.members.push_back(m);
  }
  return out;
}

int transparency_bin(double t) {
  if (t < 0.25) return 0;
  if (t < 0.5) return 1;
  if (t < 0.75) return 2;
  return 3;
}

std::string bin_label(int bin) { return "Q" + std::to_string(bin + 1); }

void assign_bins(RashomonCollection& c) {
  for (auto& m : c.members) m.bin = transparency_bin(m.train_transparency);
}

RashomonCollection filter_epsilon(const RashomonCollection& c, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("filter_epsilon: epsilon must be >= 0");
  std::map<std::pair<std::string, int>, double> best;
  for (const auto& m : c.members) {
    if (m.bin < 0) throw std::invalid_argument("filter_epsilon: collection is not binned");
    auto [it, inserted] = best.try_emplace({m.learner, m.bin}, m.train_accuracy);
    if (!inserted) it->second = std::max(it->second, m.train_accuracy);
  }
  RashomonCollection out;
  out.failures = c.failures;
  out.epsilon = epsilon;
  out.bin_reference = best;
  for (const auto& m : c.members)
    if (m.train_accuracy >= (1.0 - epsilon) * best.at({m.learner, m.bin})) out.members.push_back(m);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Bitset> member_captures(const RashomonCollection& c, std::span<const std::size_t> members,
                                    const BinaryDataset& ds, std::span<const std::size_t> rows) {
  std::vector<Bitset> caps(members.size());
  const auto k = static_cast<std::int64_t>(members.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < k; ++i) {
    const auto u = static_cast<std::size_t>(i);
    caps[u] = c.members.at(members[u]).model.prefix.capture(ds, rows);
  }
  return caps;
}

std::vector<double> icf(const RashomonCollection& c, std::span<const std::size_t> members, const BinaryDataset& ds,
                        std::span<const std::size_t> rows) {
  if (members.empty()) throw std::invalid_argument("icf: empty bin");
  const auto caps = member_captures(c, members, ds, rows);
  std::vector<double> out(rows.size());
  const auto n = static_cast<std::int64_t>(rows.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    std::size_t hits = 0;
    for (const auto& cap : caps) hits += cap.test(static_cast<std::size_t>(p)) ? 1 : 0;
    out[static_cast<std::size_t>(p)] = static_cast<double>(hits) / static_cast<double>(caps.size());
  }
  return out;
}

std::vector<double> icf_serial(const RashomonCollection& c, std::span<const std::size_t> members,
                               const BinaryDataset& ds, std::span<const std::size_t> rows) {
  if (members.empty()) throw std::invalid_argument("icf: empty bin");
  std::vector<std::size_t> hits(rows.size(), 0);
  for (auto i : members) {
    const Bitset cap = c.members.at(i).model.prefix.capture(ds, rows);
    for (std::size_t p = 0; p < rows.size(); ++p) hits[p] += cap.test(p) ? 1 : 0;
  }
  std::vector<double> out(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    out[p] = static_cast<double>(hits[p]) / static_cast<double>(members.size());
  return out;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::ICD:
      return "icd";
    case Metric::SP:
      return "sp";
    case Metric::EO:
      return "eo";
    case Metric::Accuracy:
      return "accuracy";
    case Metric::Sparsity:
      return "sparsity";
    case Metric::Transparency:
      break;
  }
  return "transparency";
}

namespace {

double one_metric(const Member& m, Metric metric, const BinaryDataset& ds, std::span<const std::size_t> rows,
                  const std::string& attribute) {
  switch (metric) {
    case Metric::ICD:
      return icd(m.model, ds, rows, attribute);
    case Metric::SP:
      return statistical_parity(predict_all(m.model, ds, rows), ds, rows, attribute);
    case Metric::EO:
      return equal_opportunity(predict_all(m.model, ds, rows), ds, rows, attribute);
    case Metric::Accuracy:
      return accuracy(m.model, ds, rows);
    case Metric::Sparsity:
      return static_cast<double>(sparsity(m.model));
    case Metric::Transparency:
      break;
  }
  return transparency(m.model, ds, rows);
}

}  // namespace

std::vector<double> member_metric(const RashomonCollection& c, std::span<const std::size_t> members, Metric metric,
                                  const BinaryDataset& ds, std::span<const std::size_t> rows,
                                  const std::string& attribute) {
  std::vector<double> out(members.size());
  const auto k = static_cast<std::int64_t>(members.size());
  std::string error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < k; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      out[u] = one_metric(c.members.at(members[u]), metric, ds, rows, attribute);
    } catch (const std::exception& e) {
#pragma omp critical(hicd_metric_error)
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw MetricError(error);
  return out;
}

std::vector<double> member_metric_serial(const RashomonCollection& c, std::span<const std::size_t> members,
                                         Metric metric, const BinaryDataset& ds, std::span<const std::size_t> rows,
                                         const std::string& attribute) {
  std::vector<double> out;
  out.reserve(members.size());
  for (auto i : members) out.push_back(one_metric(c.members.at(i), metric, ds, rows, attribute));
  return out;
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Summary s;
  s.values = values;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(values, 0.25);
  s.median = quantile(values, 0.5);
  s.q3 = quantile(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

std::array<std::optional<Summary>, 4> bin_metric_distribution(const RashomonCollection& c, const std::string& learner,
                                                              Metric metric, const BinaryDataset& ds,
                                                              std::span<const std::size_t> rows,
                                                              const std::string& attribute) {
  std::array<std::optional<Summary>, 4> out;
  for (int b = 0; b < 4; ++b) {
    const auto sel = c.select(learner, b);
    if (sel.empty()) continue;
    out[static_cast<std::size_t>(b)] = summarize(member_metric(c, sel, metric, ds, rows, attribute));
  }
  return out;
}

std::vector<std::array<std::size_t, 4>> growth_curve(const RashomonCollection& c, const std::string& learner,
                                                     std::span<const double> epsilons) {
  std::vector<std::array<std::size_t, 4>> out;
  for (double eps : epsilons) {
    const RashomonCollection f = filter_epsilon(c, eps);
    std::array<std::size_t, 4> counts{};
    for (const auto& m : f.members)
      if (m.learner == learner) ++counts[static_cast<std::size_t>(m.bin)];
    out.push_back(counts);
  }
  return out;
}

}  // namespace hicd
