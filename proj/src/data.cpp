#include "hicd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hicd {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "N/A" || s == "?" || s == "nan" || s == "NaN" || s == "null";
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

constexpr const char* kMissingLevel = "missing";

std::string interval_name(std::optional<double> lo, std::optional<double> hi) {
  std::string s = "(";
  s += lo ? csv::format_number(*lo) : "-inf";
  s += ",";
  s += hi ? csv::format_number(*hi) : "inf";
  s += hi ? "]" : ")";
  return s;
}

// Quantile cut points for right-closed bins; duplicate cuts and cuts at or above the maximum are dropped.
std::vector<double> quantile_cuts(std::vector<double> values, std::size_t n_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> cuts;
  if (values.empty()) return cuts;
  const double vmax = values.back();
  for (std::size_t k = 1; k < n_bins; ++k) {
    const double c = quantile(values, static_cast<double>(k) / static_cast<double>(n_bins));
    if (c >= vmax) continue;
    if (!cuts.empty() && c <= cuts.back()) continue;
    cuts.push_back(c);
  }
  return cuts;
}

// Bin index under (-inf,c1], (c1,c2], ..., (ck,inf).
std::size_t right_closed_bin(double v, const std::vector<double>& cuts) {
  return static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

// Bin index under (-inf,c1), [c1,c2), ..., [ck,inf).
std::size_t left_closed_bin(double v, const std::vector<double>& cuts) {
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

GroupMap make_group_map(const std::string& attribute, const std::vector<std::string>& names,
                        const std::vector<std::uint32_t>& assignment) {
  const std::size_t n = assignment.size();
  // Drop empty groups, keep declaration order.
  std::vector<std::size_t> counts(names.size(), 0);
  for (auto g : assignment) ++counts[g];
  std::vector<std::uint32_t> remap(names.size(), 0);
  GroupMap gm;
  gm.attribute = attribute;
  for (std::size_t g = 0; g < names.size(); ++g) {
    if (counts[g] == 0) continue;
    remap[g] = static_cast<std::uint32_t>(gm.names.size());
    gm.names.push_back(names[g]);
    gm.members.emplace_back(n);
  }
  gm.group_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = remap[assignment[i]];
    gm.group_of[i] = g;
    gm.members[g].set(i);
  }
  if (gm.names.size() < 2) {
    throw DataError("sensitive attribute '" + attribute +
                    "' has fewer than 2 nonempty groups; ICD is undefined");
  }
  return gm;
}

GroupMap build_groups(const RawTable& table, const GroupSpec& spec) {
  if (!table.has_column(spec.column)) {
    throw DataError("sensitive attribute '" + spec.name + "': column '" + spec.column + "' not found");
  }
  const RawColumn& col = table.column(spec.column);
  const std::size_t n = table.n_rows;
  std::vector<std::uint32_t> assignment(n, 0);
  std::vector<std::string> names;

  switch (spec.kind) {
    case GroupSpec::Kind::Categories: {
      std::map<std::string, std::size_t> freq;
      for (const auto& v : col.text) ++freq[v.empty() ? kMissingLevel : v];
      std::vector<std::string> kept = spec.keep;
      if (kept.empty()) {
        std::vector<std::pair<std::string, std::size_t>> byfreq(freq.begin(), freq.end());
        std::stable_sort(byfreq.begin(), byfreq.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        const std::size_t top = spec.top == 0 ? byfreq.size() : std::min(spec.top, byfreq.size());
        for (std::size_t i = 0; i < top; ++i) kept.push_back(byfreq[i].first);
      }
      names = kept;
      const std::size_t other_idx = names.size();
      names.push_back("Other");
      for (std::size_t i = 0; i < n; ++i) {
        const std::string v = col.text[i].empty() ? kMissingLevel : col.text[i];
        auto it = std::find(kept.begin(), kept.end(), v);
        if (it != kept.end()) {
          assignment[i] = static_cast<std::uint32_t>(it - kept.begin());
        } else if (spec.other) {
          assignment[i] = static_cast<std::uint32_t>(other_idx);
        } else {
          throw DataError("sensitive attribute '" + spec.name + "': value '" + v +
                          "' is not retained and the Other group is disabled");
        }
      }
      break;
    }
    case GroupSpec::Kind::Cuts:
    case GroupSpec::Kind::Quantiles: {
      if (!col.is_numeric) {
        throw DataError("sensitive attribute '" + spec.name + "': column '" + spec.column + "' is not numeric");
      }
      std::vector<double> cuts;
      const bool by_cuts = spec.kind == GroupSpec::Kind::Cuts;
      if (by_cuts) {
        cuts = spec.cuts;
        if (!std::is_sorted(cuts.begin(), cuts.end()) ||
            std::adjacent_find(cuts.begin(), cuts.end()) != cuts.end()) {
          throw DataError("sensitive attribute '" + spec.name + "': cuts must be strictly increasing");
        }
      } else {
        std::vector<double> values;
        for (const auto& v : col.numeric)
          if (v) values.push_back(*v);
        cuts = quantile_cuts(std::move(values), spec.quantile_bins);
      }
      const std::size_t nb = cuts.size() + 1;
      if (spec.labels.size() == nb) {
        names = spec.labels;
      } else {
        for (std::size_t b = 0; b < nb; ++b) {
          std::optional<double> lo = b == 0 ? std::nullopt : std::optional<double>(cuts[b - 1]);
          std::optional<double> hi = b == nb - 1 ? std::nullopt : std::optional<double>(cuts[b]);
          names.push_back(interval_name(lo, hi));
        }
      }
      const std::size_t missing_idx = names.size();
      names.push_back(kMissingLevel);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& v = col.numeric[i];
        if (!v) {
          assignment[i] = static_cast<std::uint32_t>(missing_idx);
        } else {
          assignment[i] = static_cast<std::uint32_t>(by_cuts ? left_closed_bin(*v, cuts) : right_closed_bin(*v, cuts));
        }
      }
      break;
    }
  }
  return make_group_map(spec.name, names, assignment);
}

}  // namespace

// ---------------------------------------------------------------------------

const RawColumn& RawTable::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw DataError("column not found: " + name);
}

bool RawTable::has_column(const std::string& name) const {
  return std::any_of(columns.begin(), columns.end(), [&](const RawColumn& c) { return c.name == name; });
}

RawTable table_from_csv(const csv::Table& t, const std::string& label_column, const std::string& positive_value) {
  std::vector<std::string> names;
  std::map<std::string, std::size_t> seen;
  for (const auto& raw : t.header) {
    const std::string h = trim(raw);
    auto& k = seen[h];
    names.push_back(k == 0 ? h : h + "." + std::to_string(k));
    ++k;
  }
  const auto label_it = std::find(names.begin(), names.end(), label_column);
  if (label_it == names.end()) throw DataError("label column not found: '" + label_column + "'");
  const std::size_t label_idx = static_cast<std::size_t>(label_it - names.begin());

  RawTable out;
  out.label_column = label_column;
  std::set<std::string> label_values;
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string v = trim(t.rows[r][label_idx]);
    if (is_missing_token(v)) {
      ++out.dropped_missing_label;
      continue;
    }
    label_values.insert(v);
    kept_rows.push_back(r);
    out.labels.push_back(v == positive_value ? 1 : 0);
  }
  if (label_values.size() > 2) {
    throw DataError("label column '" + label_column + "' is not binary (" + std::to_string(label_values.size()) +
                    " distinct values)");
  }
  if (!kept_rows.empty() && !label_values.contains(positive_value)) {
    throw DataError("positive value '" + positive_value + "' does not occur in label column '" + label_column + "'");
  }
  out.n_rows = kept_rows.size();

  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c == label_idx) continue;
    RawColumn col;
    col.name = names[c];
    col.text.reserve(out.n_rows);
    col.numeric.reserve(out.n_rows);
    bool numeric = true;
    bool any_value = false;
    for (std::size_t r : kept_rows) {
      std::string v = trim(t.rows[r][c]);
      if (is_missing_token(v)) v.clear();
      std::optional<double> d;
      if (!v.empty()) {
        any_value = true;
        d = parse_double(v);
        if (!d) numeric = false;
      }
      col.text.push_back(std::move(v));
      col.numeric.push_back(d);
    }
    col.is_numeric = numeric && any_value;
    out.columns.push_back(std::move(col));
  }
  return out;
}

RawTable load_csv(const std::filesystem::path& path, const std::string& label_column,
                  const std::string& positive_value) {
  if (!std::filesystem::exists(path)) throw DataError("file not found: " + path.string());
  return table_from_csv(csv::read(path), label_column, positive_value);
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset manifest: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("dataset manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.name = j.value("name", path.stem().string());
    m.csv_path = j.at("csv").get<std::string>();
    if (m.csv_path.is_relative()) m.csv_path = path.parent_path() / m.csv_path;
    m.label_column = j.at("label").get<std::string>();
    m.positive_value = j.value("positive_value", std::string("1"));
    m.numeric_columns = j.value("numeric", std::vector<std::string>{});
    m.categorical_columns = j.value("categorical", std::vector<std::string>{});
    m.n_bins = j.value("n_bins", std::size_t{3});
    for (const auto& g : j.value("sensitive", json::array())) {
      GroupSpec s;
      s.name = g.at("name").get<std::string>();
      s.column = g.value("column", s.name);
      s.other = g.value("other", true);
      s.labels = g.value("labels", std::vector<std::string>{});
      if (g.contains("cuts")) {
        s.kind = GroupSpec::Kind::Cuts;
        s.cuts = g.at("cuts").get<std::vector<double>>();
      } else if (g.contains("quantile_bins")) {
        s.kind = GroupSpec::Kind::Quantiles;
        s.quantile_bins = g.at("quantile_bins").get<std::size_t>();
      } else {
        s.kind = GroupSpec::Kind::Categories;
        s.keep = g.value("keep", std::vector<std::string>{});
        s.top = g.value("top", std::size_t{0});
      }
      m.sensitive.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError("dataset manifest " + path.string() + ": " + e.what());
  }
  if (m.n_bins < 2) throw DataError("dataset manifest: n_bins must be >= 2");
  return m;
}

// ---------------------------------------------------------------------------

BinaryDataset::BinaryDataset(std::string name, std::vector<FeatureInfo> features, std::vector<Bitset> bits,
                             Bitset labels, std::vector<GroupMap> groups)
    : name_(std::move(name)),
      features_(std::move(features)),
      bits_(std::move(bits)),
      labels_(std::move(labels)),
      groups_(std::move(groups)) {
  if (features_.size() != bits_.size()) throw DataError("BinaryDataset: feature/bitset count mismatch");
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (bits_[f].size() != labels_.size()) throw DataError("BinaryDataset: feature length mismatch");
    if (!index_.emplace(features_[f].name, f).second) {
      throw DataError("BinaryDataset: duplicate feature name " + features_[f].name);
    }
  }
  for (const auto& g : groups_) {
    if (g.group_of.size() != labels_.size()) throw DataError("BinaryDataset: group map length mismatch");
    std::size_t total = 0;
    for (const auto& m : g.members) total += m.count();
    if (total != labels_.size()) throw DataError("BinaryDataset: group map is not a partition");
  }
}

std::optional<std::size_t> BinaryDataset::feature_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const GroupMap& BinaryDataset::group_map(const std::string& attribute) const {
  for (const auto& g : groups_)
    if (g.attribute == attribute) return g;
  throw DataError("unknown sensitive attribute: " + attribute);
}

bool BinaryDataset::has_attribute(const std::string& attribute) const {
  return std::any_of(groups_.begin(), groups_.end(), [&](const GroupMap& g) { return g.attribute == attribute; });
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BinaryDataset binarize(const RawTable& table, const DatasetManifest& manifest) {
  if (manifest.n_bins < 2) throw DataError("binarize: n_bins must be >= 2");
  const std::size_t n = table.n_rows;
  std::vector<FeatureInfo> features;
  std::vector<Bitset> bits;
  std::vector<std::string> warnings;

  auto add = [&](const std::string& column, const std::string& level, Bitset b) {
    features.push_back({column + ":" + level, column, level});
    bits.push_back(std::move(b));
  };

  for (const auto& name : manifest.numeric_columns) {
    const RawColumn& col = table.column(name);
    if (!col.is_numeric) throw DataError("column '" + name + "' is declared numeric but has non-numeric values");
    std::vector<double> values;
    Bitset missing(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (col.numeric[i]) {
        values.push_back(*col.numeric[i]);
      } else {
        missing.set(i);
      }
    }
    const bool constant = !values.empty() && std::all_of(values.begin(), values.end(),
                                                         [&](double v) { return v == values.front(); });
    std::vector<double> cuts = quantile_cuts(values, manifest.n_bins);
    if (constant || cuts.empty()) {
      warnings.push_back("numeric column '" + name + "' has a single quantile bin; emitting one always-true indicator");
      Bitset all = ~missing;
      add(name, "any", std::move(all));
    } else {
      std::vector<Bitset> bins(cuts.size() + 1, Bitset(n));
      for (std::size_t i = 0; i < n; ++i) {
        if (col.numeric[i]) bins[right_closed_bin(*col.numeric[i], cuts)].set(i);
      }
      for (std::size_t b = 0; b < bins.size(); ++b) {
        std::optional<double> lo = b == 0 ? std::nullopt : std::optional<double>(cuts[b - 1]);
        std::optional<double> hi = b + 1 == bins.size() ? std::nullopt : std::optional<double>(cuts[b]);
        add(name, interval_name(lo, hi), std::move(bins[b]));
      }
    }
    if (missing.any()) add(name, kMissingLevel, std::move(missing));
  }

  for (const auto& name : manifest.categorical_columns) {
    const RawColumn& col = table.column(name);
    std::map<std::string, Bitset> levels;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& v = col.text[i].empty() ? std::string(kMissingLevel) : col.text[i];
      auto [it, inserted] = levels.try_emplace(v, n);
      it->second.set(i);
    }
    for (auto& [level, b] : levels) add(name, level, std::move(b));
  }

  Bitset labels(n);
  for (std::size_t i = 0; i < n; ++i)
    if (table.labels[i]) labels.set(i);

  std::vector<GroupMap> groups;
  for (const auto& spec : manifest.sensitive) {
    for (const auto& g : groups)
      if (g.attribute == spec.name) throw DataError("duplicate sensitive attribute: " + spec.name);
    groups.push_back(build_groups(table, spec));
  }

  BinaryDataset ds(manifest.name, std::move(features), std::move(bits), std::move(labels), std::move(groups));
  ds.warnings = std::move(warnings);
  return ds;
}

BinaryDataset prepare_dataset(const DatasetManifest& manifest) {
  return binarize(load_csv(manifest.csv_path, manifest.label_column, manifest.positive_value), manifest);
}

// ---------------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

SplitSpec split(const BinaryDataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.n();
  if (n < 5) throw DataError("split: need at least 5 examples");
  IndexList idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_test = std::max<std::size_t>(1, n / 5);
  SplitSpec s;
  s.seed = seed;
  s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

IndexList bootstrap_sample(const BinaryDataset& ds, std::span<const std::size_t> indices, std::uint64_t seed) {
  if (indices.empty()) throw DataError("bootstrap_sample: empty index list");
  for (std::size_t i : indices)
    if (i >= ds.n()) throw DataError("bootstrap_sample: index out of range");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, indices.size() - 1);
  IndexList out(indices.size());
  for (auto& v : out) v = indices[pick(rng)];
  return out;
}

// ---------------------------------------------------------------------------

void save_dataset(const BinaryDataset& ds, const std::filesystem::path& path) {
  json h;
  h["format"] = "hicd-dataset";
  h["version"] = 1;
  h["name"] = ds.name();
  h["n"] = ds.n();
  h["words_per_bitset"] = (ds.n() + 63) / 64;
  h["payload_order"] = "features,labels,groups";
  json feats = json::array();
  for (const auto& f : ds.features()) feats.push_back({{"name", f.name}, {"column", f.column}, {"level", f.level}});
  h["features"] = feats;
  json groups = json::array();
  for (const auto& g : ds.groups()) groups.push_back({{"attribute", g.attribute}, {"names", g.names}});
  h["groups"] = groups;

  std::vector<unsigned char> payload;
  for (std::size_t f = 0; f < ds.n_features(); ++f) ds.feature(f).append_bytes(payload);
  ds.labels().append_bytes(payload);
  for (const auto& g : ds.groups())
    for (const auto& m : g.members) m.append_bytes(payload);
  h["payload_bytes"] = payload.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset cache: " + path.string());
  out << h.dump() << '\n';
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("failed writing dataset cache: " + path.string());
}

BinaryDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset cache: " + path.string());
  std::string header;
  std::getline(in, header);
  json h;
  try {
    h = json::parse(header);
  } catch (const json::exception& e) {
    throw DataError("dataset cache header is not valid JSON: " + std::string(e.what()));
  }
  if (h.value("format", "") != "hicd-dataset" || h.value("version", 0) != 1) {
    throw DataError("unsupported dataset cache format: " + path.string());
  }
  const std::size_t n = h.at("n").get<std::size_t>();
  const std::size_t bytes_per = ((n + 63) / 64) * 8;
  std::vector<unsigned char> payload(h.at("payload_bytes").get<std::size_t>());
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) throw DataError("dataset cache payload truncated");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("dataset cache has trailing bytes");

  std::size_t off = 0;
  auto next = [&]() {
    if (off + bytes_per > payload.size()) throw DataError("dataset cache payload too short");
    Bitset b = Bitset::from_bytes(n, std::span<const unsigned char>(payload.data() + off, bytes_per));
    off += bytes_per;
    return b;
  };
  std::vector<FeatureInfo> features;
  std::vector<Bitset> bits;
  for (const auto& f : h.at("features")) {
    features.push_back({f.at("name"), f.at("column"), f.at("level")});
    bits.push_back(next());
  }
  Bitset labels = next();
  std::vector<GroupMap> groups;
  for (const auto& g : h.at("groups")) {
    GroupMap gm;
    gm.attribute = g.at("attribute");
    gm.names = g.at("names").get<std::vector<std::string>>();
    gm.group_of.assign(n, 0);
    for (std::size_t k = 0; k < gm.names.size(); ++k) {
      gm.members.push_back(next());
      gm.members.back().for_each_set([&](std::size_t i) { gm.group_of[i] = static_cast<std::uint32_t>(k); });
    }
    groups.push_back(std::move(gm));
  }
  if (off != payload.size()) throw DataError("dataset cache payload has unexpected length");
  return BinaryDataset(h.at("name"), std::move(features), std::move(bits), std::move(labels), std::move(groups));
}

void save_split(const SplitSpec& s, const std::filesystem::path& path) {
  json j{{"seed", s.seed}, {"train", s.train}, {"test", s.test}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file: " + path.string());
  out << j.dump() << '\n';
}

SplitSpec load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path.string());
  json j;
  in >> j;
  SplitSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<IndexList>();
  s.test = j.at("test").get<IndexList>();
  return s;
}

}  // namespace hicd
