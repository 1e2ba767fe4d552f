#include "hicd/hybrid.hpp"

#include <algorithm>
#include <sstream>

namespace hicd {

using nlohmann::json;

std::vector<std::int32_t> Prefix::route(const BinaryDataset& ds, std::span<const std::size_t> rows) const {
  std::vector<std::int32_t> out(rows.size(), -1);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (rules[r].antecedent.matches(ds, rows[p])) {
        out[p] = static_cast<std::int32_t>(r);
        break;
      }
    }
  }
  return out;
}

Bitset Prefix::capture(const BinaryDataset& ds, std::span<const std::size_t> rows) const {
  Bitset cap(rows.size());
  for (const auto& r : rules) cap |= r.antecedent.evaluate(ds, rows);
  return cap;
}

std::vector<Bitset> Prefix::per_rule_capture(const BinaryDataset& ds, std::span<const std::size_t> rows) const {
  std::vector<Bitset> out;
  Bitset seen(rows.size());
  for (const auto& r : rules) {
    Bitset s = r.antecedent.evaluate(ds, rows);
    s.and_not(seen);
    seen |= s;
    out.push_back(std::move(s));
  }
  return out;
}

bool Prefix::same_rules(const Prefix& o) const {
  if (rules.size() != o.rules.size()) return false;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].consequent != o.rules[i].consequent) return false;
    if (rules[i].antecedent.literals != o.rules[i].antecedent.literals) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

bool predict(const HybridModel& m, const BinaryDataset& ds, std::size_t idx) {
  if (idx >= ds.n()) throw std::out_of_range("predict: index outside dataset");
  for (const auto& r : m.prefix.rules)
    if (r.antecedent.matches(ds, idx)) return r.consequent;
  const std::size_t one[1] = {idx};
  return m.blackbox->predict(ds, one).test(0);
}

Bitset predict_all(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows) {
  const auto routes = m.prefix.route(ds, rows);
  std::vector<std::size_t> deferred_rows;
  std::vector<std::size_t> deferred_pos;
  Bitset out(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (routes[p] >= 0) {
      if (m.prefix.rules[static_cast<std::size_t>(routes[p])].consequent) out.set(p);
    } else {
      deferred_rows.push_back(rows[p]);
      deferred_pos.push_back(p);
    }
  }
  if (!deferred_rows.empty()) {
    const Bitset bb = m.blackbox->predict(ds, deferred_rows);
    for (std::size_t k = 0; k < deferred_pos.size(); ++k)
      if (bb.test(k)) out.set(deferred_pos[k]);
  }
  return out;
}

double transparency(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) throw MetricError("transparency: empty subset");
  return static_cast<double>(m.prefix.capture(ds, rows).count()) / static_cast<double>(rows.size());
}

std::vector<GroupRate> group_rates(const BinaryDataset& ds, std::span<const std::size_t> rows,
                                   const std::string& attribute, const Bitset& flags, const Bitset* eligible) {
  const GroupMap& gm = ds.group_map(attribute);
  if (flags.size() != rows.size()) throw std::invalid_argument("group_rates: flags not aligned with rows");
  std::vector<GroupRate> acc(gm.size());
  for (std::size_t g = 0; g < gm.size(); ++g) acc[g].group = gm.names[g];
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (eligible && !eligible->test(p)) continue;
    auto& r = acc[gm.group_of[rows[p]]];
    ++r.denominator;
    if (flags.test(p)) ++r.numerator;
  }
  std::erase_if(acc, [](const GroupRate& r) { return r.denominator == 0; });
  if (acc.size() < 2) {
    throw MetricError("ICD undefined: attribute '" + attribute + "' has fewer than 2 nonempty groups on this subset");
  }
  return acc;
}

double max_rate_gap(const std::vector<GroupRate>& rates) {
  double lo = 1.0;
  double hi = 0.0;
  for (const auto& r : rates) {
    const double v = r.rate();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

std::vector<GroupRate> group_coverage(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows,
                                      const std::string& attribute) {
  return group_rates(ds, rows, attribute, m.prefix.capture(ds, rows));
}

double icd_of_capture(const Bitset& capture, const BinaryDataset& ds, std::span<const std::size_t> rows,
                      const std::string& attribute) {
  return max_rate_gap(group_rates(ds, rows, attribute, capture));
}

double icd(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows,
           const std::string& attribute) {
  return icd_of_capture(m.prefix.capture(ds, rows), ds, rows, attribute);
}

double accuracy_of(const Bitset& predictions, const BinaryDataset& ds, std::span<const std::size_t> rows) {
  if (rows.empty()) throw MetricError("accuracy: empty subset");
  std::size_t correct = 0;
  for (std::size_t p = 0; p < rows.size(); ++p)
    if (predictions.test(p) == ds.label(rows[p])) ++correct;
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double accuracy(const HybridModel& m, const BinaryDataset& ds, std::span<const std::size_t> rows) {
  return accuracy_of(predict_all(m, ds, rows), ds, rows);
}

double statistical_parity(const Bitset& pred, const BinaryDataset& ds, std::span<const std::size_t> rows,
                          const std::string& attribute) {
  return max_rate_gap(group_rates(ds, rows, attribute, pred));
}

double equal_opportunity(const Bitset& pred, const BinaryDataset& ds, std::span<const std::size_t> rows,
                         const std::string& attribute) {
  Bitset positive(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    if (ds.label(rows[p])) positive.set(p);
  return max_rate_gap(group_rates(ds, rows, attribute, pred, &positive));
}

// ---------------------------------------------------------------------------

json prefix_to_json(const Prefix& p, const BinaryDataset& ds) {
  json rules = json::array();
  for (const auto& r : p.rules) {
    json lits = json::array();
    for (const auto& l : r.antecedent.literals) lits.push_back({ds.features()[l.feature].name, l.value ? 1 : 0});
    rules.push_back({{"literals", lits}, {"q", r.consequent ? 1 : 0}});
  }
  return rules;
}

Prefix prefix_from_json(const json& j, const BinaryDataset& ds) {
  Prefix p;
  for (const auto& r : j) {
    Rule rule;
    for (const auto& l : r.at("literals")) {
      const std::string name = l.at(0);
      auto f = ds.feature_index(name);
      if (!f) throw DataError("model references unknown feature: " + name);
      rule.antecedent.literals.push_back({static_cast<std::uint32_t>(*f), l.at(1).get<int>() != 0});
    }
    rule.consequent = r.at("q").get<int>() != 0;
    p.rules.push_back(std::move(rule));
  }
  return p;
}

json model_to_json(const HybridModel& m, const BinaryDataset& ds, const json& blackbox_ref) {
  return {{"rules", prefix_to_json(m.prefix, ds)},
          {"blackbox_ref", blackbox_ref},
          {"provenance",
           {{"method", m.provenance.method},
            {"learner", m.provenance.learner},
            {"hyperparameters", m.provenance.hyperparameters},
            {"bootstrap_seed", m.provenance.bootstrap_seed},
            {"run", m.provenance.run}}}};
}

HybridModel model_from_json(const json& j, const BinaryDataset& ds) {
  HybridModel m;
  m.prefix = prefix_from_json(j.at("rules"), ds);
  m.blackbox = predictor_from_json(j.at("blackbox_ref"));
  const auto& p = j.at("provenance");
  m.provenance.method = p.at("method");
  m.provenance.learner = p.at("learner");
  m.provenance.hyperparameters = p.at("hyperparameters");
  m.provenance.bootstrap_seed = p.at("bootstrap_seed");
  m.provenance.run = p.at("run");
  return m;
}

std::string render(const Prefix& p, const BinaryDataset& ds) {
  std::ostringstream os;
  for (std::size_t i = 0; i < p.rules.size(); ++i) {
    os << (i == 0 ? "if " : "else if ") << "[" << p.rules[i].antecedent.describe(ds) << "] then ["
       << (p.rules[i].consequent ? 1 : 0) << "]\n";
  }
  os << (p.rules.empty() ? "" : "else ") << "[black-box]\n";
  return os.str();
}

}  // namespace hicd
