#include "hicd/rules.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"

namespace hicd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Antecedent
// ---------------------------------------------------------------------------

bool Antecedent::matches(const BinaryDataset& ds, std::size_t row) const {
  for (const auto& l : literals)
    if (ds.feature(l.feature).test(row) != l.value) return false;
  return true;
}

Bitset Antecedent::evaluate(const BinaryDataset& ds, std::span<const std::size_t> rows) const {
  Bitset out(rows.size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    if (matches(ds, rows[p])) out.set(p);
  return out;
}

std::string Antecedent::describe(const BinaryDataset& ds) const {
  if (literals.empty()) return "True";
  std::string s;
  for (std::size_t i = 0; i < literals.size(); ++i) {
    if (i) s += " && ";
    if (!literals[i].value) s += "not ";
    s += ds.features()[literals[i].feature].name;
  }
  return s;
}

std::size_t support_of(const Antecedent& a, const Bitset& subset) { return Bitset::count_and(a.support, subset); }

std::size_t support_of(const Antecedent& a, std::span<const std::size_t> subset) {
  std::size_t c = 0;
  for (std::size_t p : subset) {
    if (p >= a.support.size()) throw std::out_of_range("support_of: position outside the mining rows");
    if (a.support.test(p)) ++c;
  }
  return c;
}

// ---------------------------------------------------------------------------
// FP-Growth
// ---------------------------------------------------------------------------

namespace {

class FpTree {
 public:
  struct Node {
    std::uint32_t item;
    std::size_t count;
    std::int32_t parent;
    std::int32_t next;  // next node carrying the same item
    std::vector<std::pair<std::uint32_t, std::int32_t>> children;
  };

  // Weighted paths; items inside a path may come in any order.
  FpTree(const std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>>& paths, std::size_t n_items,
         std::size_t min_count) {
    std::vector<std::size_t> freq(n_items, 0);
    for (const auto& [items, w] : paths)
      for (auto it : items) freq[it] += w;
    for (std::uint32_t i = 0; i < n_items; ++i)
      if (freq[i] >= min_count && freq[i] > 0) order_.push_back(i);
    // Most frequent first; item id breaks ties.
    std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
      return freq[a] != freq[b] ? freq[a] > freq[b] : a < b;
    });
    rank_.assign(n_items, -1);
    for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = static_cast<std::int32_t>(r);
    head_.assign(order_.size(), -1);
    item_count_.assign(order_.size(), 0);
    nodes_.push_back({0, 0, -1, -1, {}});

    std::vector<std::uint32_t> buf;
    for (const auto& [items, w] : paths) {
      buf.clear();
      for (auto it : items)
        if (rank_[it] >= 0) buf.push_back(it);
      std::sort(buf.begin(), buf.end(), [&](std::uint32_t a, std::uint32_t b) { return rank_[a] < rank_[b]; });
      insert(buf, w);
    }
  }

  const std::vector<std::uint32_t>& order() const { return order_; }
  std::size_t item_count(std::size_t r) const { return item_count_[r]; }

  // Prefix paths (root excluded) leading to every node of the item at rank r.
  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> conditional_base(std::size_t r) const {
    std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> base;
    for (std::int32_t n = head_[r]; n >= 0; n = nodes_[static_cast<std::size_t>(n)].next) {
      const Node& node = nodes_[static_cast<std::size_t>(n)];
      std::vector<std::uint32_t> path;
      for (std::int32_t p = node.parent; p > 0; p = nodes_[static_cast<std::size_t>(p)].parent) {
        path.push_back(nodes_[static_cast<std::size_t>(p)].item);
      }
      if (!path.empty()) base.emplace_back(std::move(path), node.count);
    }
    return base;
  }

 private:
  void insert(const std::vector<std::uint32_t>& items, std::size_t w) {
    std::int32_t cur = 0;
    for (auto it : items) {
      auto& kids = nodes_[static_cast<std::size_t>(cur)].children;
      auto found = std::find_if(kids.begin(), kids.end(), [&](const auto& c) { return c.first == it; });
      std::int32_t child;
      if (found != kids.end()) {
        child = found->second;
      } else {
        child = static_cast<std::int32_t>(nodes_.size());
        const auto r = static_cast<std::size_t>(rank_[it]);
        nodes_.push_back({it, 0, cur, head_[r], {}});
        head_[r] = child;
        nodes_[static_cast<std::size_t>(cur)].children.emplace_back(it, child);
      }
      nodes_[static_cast<std::size_t>(child)].count += w;
      item_count_[static_cast<std::size_t>(rank_[it])] += w;
      cur = child;
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<std::int32_t> rank_;
  std::vector<std::int32_t> head_;
  std::vector<std::size_t> item_count_;
};

void mine_tree(const FpTree& tree, std::size_t n_items, std::size_t min_count, std::size_t max_len,
               std::vector<std::uint32_t>& suffix, std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>>& out) {
  const auto& order = tree.order();
  for (std::size_t r = order.size(); r-- > 0;) {
    suffix.push_back(order[r]);
    out.emplace_back(suffix, tree.item_count(r));
    if (suffix.size() < max_len) {
      auto base = tree.conditional_base(r);
      if (!base.empty()) {
        FpTree cond(base, n_items, min_count);
        if (!cond.order().empty()) mine_tree(cond, n_items, min_count, max_len, suffix, out);
      }
    }
    suffix.pop_back();
  }
}

Literal item_literal(std::uint32_t item) { return Literal{item / 2, (item % 2) == 0}; }

}  // namespace

std::vector<FrequentItemset> fp_growth(const std::vector<std::vector<std::uint32_t>>& transactions,
                                       std::size_t n_items, std::size_t min_count, std::size_t max_len) {
  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> paths;
  paths.reserve(transactions.size());
  for (const auto& t : transactions) paths.emplace_back(t, 1);
  FpTree tree(paths, n_items, std::max<std::size_t>(min_count, 1));
  std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> raw;
  std::vector<std::uint32_t> suffix;
  if (max_len > 0) mine_tree(tree, n_items, std::max<std::size_t>(min_count, 1), max_len, suffix, raw);

  std::vector<FrequentItemset> out;
  out.reserve(raw.size());
  for (auto& [items, count] : raw) {
    FrequentItemset fi;
    for (auto it : items) fi.literals.push_back(item_literal(it));
    std::sort(fi.literals.begin(), fi.literals.end());
    fi.count = count;
    out.push_back(std::move(fi));
  }
  return out;
}

RuleUniverse mine_antecedents(const BinaryDataset& ds, std::span<const std::size_t> train, const MiningConfig& cfg) {
  if (!(cfg.min_support > 0.0 && cfg.min_support < 1.0)) throw DataError("mine_antecedents: min_support must be in (0,1)");
  if (cfg.max_card < 1 || cfg.max_card > 2) throw DataError("mine_antecedents: max_card must be 1 or 2");
  if (cfg.max_rules < 1) throw DataError("mine_antecedents: max_rules must be >= 1");
  if (train.empty()) throw DataError("mine_antecedents: empty training set");

  const std::size_t n = train.size();
  const std::size_t nf = ds.n_features();
  auto frequent = [&](std::size_t c) { return static_cast<double>(c) / static_cast<double>(n) >= cfg.min_support; };
  std::size_t min_count = 1;
  while (!frequent(min_count) && min_count <= n) ++min_count;
  if (min_count > n) throw DataError("empty rule universe");

  std::vector<std::vector<std::uint32_t>> transactions(n);
  for (std::size_t p = 0; p < n; ++p) {
    auto& t = transactions[p];
    for (std::uint32_t f = 0; f < nf; ++f) {
      const bool v = ds.feature(f).test(train[p]);
      if (v) {
        t.push_back(2 * f);
      } else if (cfg.negations) {
        t.push_back(2 * f + 1);
      }
    }
  }
  auto itemsets = fp_growth(transactions, 2 * nf, min_count, cfg.max_card);

  // Distinct features only (a literal and its complement never co-occur anyway).
  std::erase_if(itemsets, [](const FrequentItemset& fi) {
    for (std::size_t i = 1; i < fi.literals.size(); ++i)
      if (fi.literals[i].feature == fi.literals[i - 1].feature) return true;
    return false;
  });
  if (itemsets.empty()) throw DataError("empty rule universe");

  std::sort(itemsets.begin(), itemsets.end(), [](const FrequentItemset& a, const FrequentItemset& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.literals < b.literals;
  });
  if (itemsets.size() > cfg.max_rules) itemsets.resize(cfg.max_rules);

  RuleUniverse u;
  u.min_support = cfg.min_support;
  u.max_rules = cfg.max_rules;
  u.n_mining_rows = n;
  for (std::size_t k = 0; k < itemsets.size(); ++k) {
    Antecedent a;
    a.literals = std::move(itemsets[k].literals);
    a.id = k;
    a.support = a.evaluate(ds, train);
    if (a.support.count() != itemsets[k].count) throw std::logic_error("fp_growth support disagrees with bitset count");
    u.antecedents.push_back(std::move(a));
  }
  return u;
}

// ---------------------------------------------------------------------------

void save_universe(const RuleUniverse& u, const BinaryDataset& ds, const std::filesystem::path& path) {
  json rules = json::array();
  for (const auto& a : u.antecedents) {
    json lits = json::array();
    for (const auto& l : a.literals) lits.push_back({ds.features()[l.feature].name, l.value ? 1 : 0});
    rules.push_back({{"literals", lits}, {"support", a.support.count()}});
  }
  json j{{"format", "hicd-rules"},
         {"version", 1},
         {"min_support", u.min_support},
         {"max_rules", u.max_rules},
         {"n_mining_rows", u.n_mining_rows},
         {"rules", rules}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write rule universe: " + path.string());
  out << j.dump(1) << '\n';
}

RuleUniverse load_universe(const BinaryDataset& ds, std::span<const std::size_t> train,
                           const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rule universe: " + path.string());
  json j;
  in >> j;
  if (j.value("format", "") != "hicd-rules") throw DataError("not a rule universe file: " + path.string());
  RuleUniverse u;
  u.min_support = j.at("min_support");
  u.max_rules = j.at("max_rules");
  u.n_mining_rows = train.size();
  std::size_t k = 0;
  for (const auto& r : j.at("rules")) {
    Antecedent a;
    for (const auto& l : r.at("literals")) {
      const std::string name = l.at(0);
      auto f = ds.feature_index(name);
      if (!f) throw DataError("rule universe references unknown feature: " + name);
      a.literals.push_back({static_cast<std::uint32_t>(*f), l.at(1).get<int>() != 0});
    }
    a.id = k++;
    a.support = a.evaluate(ds, train);
    if (a.support.count() != r.at("support").get<std::size_t>()) {
      throw DataError("rule universe support mismatch; cache was mined on a different training split");
    }
    u.antecedents.push_back(std::move(a));
  }
  return u;
}

}  // namespace hicd
