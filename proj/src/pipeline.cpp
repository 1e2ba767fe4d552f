#include "hicd/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "hicd/csv.hpp"
#include "hicd/stats.hpp"

namespace hicd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kDataset = "dataset.bin";
const char* kSplit = "split.json";
const char* kRules = "rules.json";
const char* kCollection = "collection.json";

std::string fmt(double v) { return csv::format_number(v); }

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

void apply_search(SearchConfig& s, const json& j, const std::string& where) {
  reject_unknown(j, {"lambda", "beta", "c_min", "eta", "max_prefix_len", "time_limit", "memory_limit", "max_nodes"},
                 where);
  read_key(j, "lambda", s.lambda);
  read_key(j, "beta", s.beta);
  read_key(j, "c_min", s.c_min);
  read_key(j, "eta", s.eta);
  read_key(j, "max_prefix_len", s.max_prefix_len);
  read_key(j, "time_limit", s.time_limit);
  read_key(j, "memory_limit", s.memory_limit);
  read_key(j, "max_nodes", s.max_nodes);
}

void apply_anneal(AnnealConfig& a, const json& j, const std::string& where) {
  reject_unknown(j,
                 {"beta_transparency", "lambda_sparsity", "iterations", "initial_temperature", "cooling", "max_rules"},
                 where);
  read_key(j, "beta_transparency", a.beta_transparency);
  read_key(j, "lambda_sparsity", a.lambda_sparsity);
  read_key(j, "iterations", a.iterations);
  read_key(j, "initial_temperature", a.initial_temperature);
  read_key(j, "cooling", a.cooling);
  read_key(j, "max_rules", a.max_rules);
}

std::string default_grid_key(Method m) {
  switch (m) {
    case Method::Pre:
    case Method::Post:
      return "c_min";
    case Method::AnnealSet:
      return "beta_transparency";
    case Method::AnnealList:
      break;
  }
  return "lambda_sparsity";
}

bool is_exact(Method m) { return m == Method::Pre || m == Method::Post; }

std::vector<LearnerEntry> default_learners() {
  std::vector<LearnerEntry> out;
  const std::pair<const char*, Method> defs[] = {{"HybridCORELSPre", Method::Pre},
                                                 {"HybridCORELSPost", Method::Post},
                                                 {"HyRS", Method::AnnealSet},
                                                 {"CRL", Method::AnnealList}};
  for (const auto& [name, m] : defs) {
    LearnerEntry e;
    e.learner = name;
    e.method = m;
    e.grid_key = default_grid_key(m);
    e.grid = default_grid(m);
    if (m == Method::AnnealList) e.anneal_overrides = {{"beta_transparency", 0.05}};
    out.push_back(std::move(e));
  }
  return out;
}

std::string constrained_name(const std::string& learner, double eta) { return learner + "[eta=" + fmt(eta) + "]"; }

void require(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) {
    throw ConfigError("missing artifact " + p.string() + "; run '" + producer + "' first with the same --out");
  }
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(1) << "\n";
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

struct Inputs {
  BinaryDataset ds;
  SplitSpec split;
};

Inputs load_inputs(const RunConfig& cfg) {
  require(cfg.out / kDataset, "prepare");
  require(cfg.out / kSplit, "prepare");
  return {load_dataset(cfg.out / kDataset), load_split(cfg.out / kSplit)};
}

RuleUniverse load_rules(const RunConfig& cfg, const Inputs& in) {
  require(cfg.out / kRules, "mine");
  return load_universe(in.ds, in.split.train, cfg.out / kRules);
}

std::string split_tag(const RunConfig& cfg, const char* part) {
  return std::string(part) + ":" + std::to_string(cfg.split_seed);
}

void log_line(const std::string& s) { std::cerr << "[hicd] " << s << "\n"; }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> logspace(double lo_exp, double hi_exp, std::size_t n) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    v.push_back(std::pow(10.0, lo_exp + t * (hi_exp - lo_exp)));
  }
  return v;
}

std::vector<double> default_grid(Method m) {
  switch (m) {
    case Method::Pre:
    case Method::Post:
      return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    case Method::AnnealSet:
      return logspace(-3, 0, 10);
    case Method::AnnealList:
      break;
  }
  return logspace(-3, -1, 10);
}

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"dataset", "seed", "split_seed", "mining", "forest", "search", "anneal", "learners", "n_bootstrap",
                  "agreement_threshold", "epsilons", "growth_epsilons", "attributes", "mitigation", "alpha", "workers",
                  "out"},
                 "config");
  RunConfig c;
  try {
    c.dataset = j.at("dataset").get<std::string>();
    if (c.dataset.is_relative()) c.dataset = base_dir / c.dataset;
    read_key(j, "seed", c.seed);
    read_key(j, "split_seed", c.split_seed);
    if (j.contains("mining")) {
      const auto& m = j.at("mining");
      reject_unknown(m, {"min_support", "max_card", "max_rules", "negations"}, "config.mining");
      read_key(m, "min_support", c.mining.min_support);
      read_key(m, "max_card", c.mining.max_card);
      read_key(m, "max_rules", c.mining.max_rules);
      read_key(m, "negations", c.mining.negations);
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      reject_unknown(f, {"n_trees", "max_depth", "min_samples_split"}, "config.forest");
      read_key(f, "n_trees", c.forest.n_trees);
      read_key(f, "max_depth", c.forest.max_depth);
      read_key(f, "min_samples_split", c.forest.min_samples_split);
    }
    if (j.contains("search")) apply_search(c.search, j.at("search"), "config.search");
    if (j.contains("anneal")) apply_anneal(c.anneal, j.at("anneal"), "config.anneal");
    if (j.contains("learners")) {
      for (const auto& e : j.at("learners")) {
        reject_unknown(e, {"learner", "method", "grid_key", "grid", "search", "anneal"}, "config.learners[]");
        LearnerEntry le;
        le.learner = e.at("learner").get<std::string>();
        le.method = method_from_string(e.at("method").get<std::string>());
        le.grid_key = e.value("grid_key", default_grid_key(le.method));
        le.grid = e.contains("grid") ? e.at("grid").get<std::vector<double>>() : default_grid(le.method);
        if (e.contains("search")) le.search_overrides = e.at("search");
        if (e.contains("anneal")) le.anneal_overrides = e.at("anneal");
        c.learners.push_back(std::move(le));
      }
    } else {
      c.learners = default_learners();
    }
    read_key(j, "n_bootstrap", c.n_bootstrap);
    read_key(j, "agreement_threshold", c.agreement_threshold);
    read_key(j, "epsilons", c.epsilons);
    read_key(j, "growth_epsilons", c.growth_epsilons);
    read_key(j, "attributes", c.attributes);
    if (j.contains("mitigation")) {
      const auto& m = j.at("mitigation");
      reject_unknown(m, {"eta", "attribute"}, "config.mitigation");
      read_key(m, "eta", c.etas);
      if (m.contains("attribute")) c.mitigation_attribute = m.at("attribute").get<std::string>();
    }
    read_key(j, "alpha", c.alpha);
    read_key(j, "workers", c.workers);
    if (j.contains("out")) {
      c.out = j.at("out").get<std::string>();
      if (c.out.is_relative()) c.out = base_dir / c.out;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.growth_epsilons.empty()) {
    for (int i = 0; i <= 20; ++i) c.growth_epsilons.push_back(0.005 * i);
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(read_json(path), fs::absolute(path).parent_path());
}

json RunConfig::to_json() const {
  json learners_j = json::array();
  for (const auto& e : learners) {
    learners_j.push_back({{"learner", e.learner},
                          {"method", hicd::to_string(e.method)},
                          {"grid_key", e.grid_key},
                          {"grid", e.grid},
                          {"search", e.search_overrides},
                          {"anneal", e.anneal_overrides}});
  }
  json j{{"dataset", dataset.string()},
         {"seed", seed},
         {"split_seed", split_seed},
         {"mining",
          {{"min_support", mining.min_support},
           {"max_card", mining.max_card},
           {"max_rules", mining.max_rules},
           {"negations", mining.negations}}},
         {"forest",
          {{"n_trees", forest.n_trees},
           {"max_depth", forest.max_depth},
           {"min_samples_split", forest.min_samples_split}}},
         {"search",
          {{"lambda", search.lambda},
           {"beta", search.beta},
           {"max_prefix_len", search.max_prefix_len},
           {"time_limit", search.time_limit},
           {"memory_limit", search.memory_limit},
           {"max_nodes", search.max_nodes}}},
         {"anneal",
          {{"beta_transparency", anneal.beta_transparency},
           {"lambda_sparsity", anneal.lambda_sparsity},
           {"iterations", anneal.iterations},
           {"initial_temperature", anneal.initial_temperature},
           {"cooling", anneal.cooling},
           {"max_rules", anneal.max_rules}}},
         {"learners", learners_j},
         {"n_bootstrap", n_bootstrap},
         {"agreement_threshold", agreement_threshold},
         {"epsilons", epsilons},
         {"growth_epsilons", growth_epsilons},
         {"attributes", attributes},
         {"mitigation", {{"eta", etas}}},
         {"alpha", alpha},
         {"workers", workers},
         {"out", out.string()}};
  if (mitigation_attribute) j["mitigation"]["attribute"] = *mitigation_attribute;
  return j;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (!fs::exists(dataset)) fail("dataset manifest not found: " + dataset.string());
  if (!(mining.min_support > 0.0 && mining.min_support < 1.0)) fail("mining.min_support must lie in (0, 1)");
  if (mining.max_card < 1 || mining.max_card > 2) fail("mining.max_card must be 1 or 2");
  if (mining.max_rules < 1) fail("mining.max_rules must be >= 1");
  if (learners.empty()) fail("no learners configured");
  if (!(agreement_threshold > 0.0 && agreement_threshold <= 1.0)) fail("agreement_threshold must lie in (0, 1]");
  for (double e : epsilons)
    if (!(e >= 0.0)) fail("epsilons must be >= 0");
  for (double e : growth_epsilons)
    if (!(e >= 0.0)) fail("growth_epsilons must be >= 0");
  if (!etas.empty() && !mitigation_attribute) fail("mitigation.eta given without mitigation.attribute");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (workers < 0) fail("workers must be >= 0");
  try {
    forest.validate();
    for (const auto& s : learner_specs()) {
      s.search.validate();
      s.anneal.validate();
    }
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

std::vector<LearnerSpec> RunConfig::learner_specs() const {
  std::vector<LearnerSpec> out;
  auto expand = [&](const LearnerEntry& e, const std::string& name, std::optional<double> eta) {
    for (double v : e.grid) {
      LearnerSpec s;
      s.learner = name;
      s.method = e.method;
      s.search = search;
      s.anneal = anneal;
      apply_search(s.search, e.search_overrides, "config.learners[" + e.learner + "].search");
      apply_anneal(s.anneal, e.anneal_overrides, "config.learners[" + e.learner + "].anneal");
      if (is_exact(e.method)) {
        apply_search(s.search, json{{e.grid_key, v}}, "config.learners[" + e.learner + "].grid_key");
        if (eta) {
          s.search.eta = *eta;
          s.search.attribute = mitigation_attribute;
        }
        s.hyperparameters = {{"c_min", s.search.c_min},
                             {"lambda", s.search.lambda},
                             {"beta", s.search.beta},
                             {"eta", s.search.eta},
                             {"base_learner", e.learner}};
        if (s.search.attribute) s.hyperparameters["attribute"] = *s.search.attribute;
      } else {
        apply_anneal(s.anneal, json{{e.grid_key, v}}, "config.learners[" + e.learner + "].grid_key");
        s.hyperparameters = {{"beta_transparency", s.anneal.beta_transparency},
                             {"lambda_sparsity", s.anneal.lambda_sparsity},
                             {"iterations", s.anneal.iterations},
                             {"base_learner", e.learner}};
      }
      out.push_back(std::move(s));
    }
  };
  for (const auto& e : learners) expand(e, e.learner, std::nullopt);
  for (double eta : etas)
    for (const auto& e : learners)
      if (is_exact(e.method)) expand(e, constrained_name(e.learner, eta), eta);
  return out;
}

void Overrides::apply(RunConfig& cfg) const {
  if (out) cfg.out = *out;
  if (workers) cfg.workers = *workers;
  if (seed) cfg.seed = *seed;
  if (time_limit) cfg.search.time_limit = *time_limit;
  if (memory_limit) cfg.search.memory_limit = *memory_limit;
  if (eta) cfg.etas = {*eta};
  if (epsilon) cfg.epsilons = {*epsilon};
  if (attribute) {
    cfg.mitigation_attribute = *attribute;
    if (std::find(cfg.attributes.begin(), cfg.attributes.end(), *attribute) == cfg.attributes.end())
      cfg.attributes.push_back(*attribute);
  }
}

// ---------------------------------------------------------------------------

void save_collection(const RashomonCollection& c, const BinaryDataset& ds, const fs::path& path) {
  json members = json::array();
  for (const auto& m : c.members) {
    members.push_back({{"id", m.id},
                       {"learner", m.learner},
                       {"spec", m.spec},
                       {"run", m.run},
                       {"objective", m.objective},
                       {"optimal", m.optimal},
                       {"expanded", m.expanded},
                       {"train_transparency", m.train_transparency},
                       {"train_accuracy", m.train_accuracy},
                       {"sample_icd", m.sample_icd ? json(*m.sample_icd) : json(nullptr)},
                       {"model", model_to_json(m.model, ds, m.model.blackbox->to_json())}});
  }
  json failures = json::array();
  for (const auto& f : c.failures)
    failures.push_back({{"learner", f.learner}, {"spec", f.spec}, {"run", f.run}, {"message", f.message}});
  auto os = open_out(path);
  os << json{{"format", "hicd-collection"}, {"version", 1}, {"dataset", ds.name()}, {"members", members},
             {"failures", failures}}
            .dump()
     << "\n";
}

RashomonCollection load_collection(const BinaryDataset& ds, const SplitSpec& split, const fs::path& path) {
  const json j = read_json(path);
  if (j.value("format", "") != "hicd-collection") throw ConfigError(path.string() + " is not a collection file");
  RashomonCollection c;
  for (const auto& mj : j.at("members")) {
    Member m;
    m.id = mj.at("id");
    m.learner = mj.at("learner");
    m.spec = mj.at("spec");
    m.run = mj.at("run");
    m.objective = mj.at("objective");
    m.optimal = mj.at("optimal");
    m.expanded = mj.at("expanded");
    m.train_transparency = mj.at("train_transparency");
    m.train_accuracy = mj.at("train_accuracy");
    if (!mj.at("sample_icd").is_null()) m.sample_icd = mj.at("sample_icd").get<double>();
    m.model = model_from_json(mj.at("model"), ds);
    m.fingerprint = m.model.blackbox->predict(ds, split.train);
    c.members.push_back(std::move(m));
  }
  for (const auto& fj : j.at("failures")) c.failures.push_back({fj.at("learner"), fj.at("spec"), fj.at("run"), fj.at("message")});
  return c;
}

// ---------------------------------------------------------------------------

CommandResult cmd_prepare(const RunConfig& cfg) {
  cfg.validate();
  CommandResult r;
  const auto manifest = DatasetManifest::load(cfg.dataset);
  BinaryDataset ds = prepare_dataset(manifest);
  for (const auto& a : cfg.attributes)
    if (!ds.has_attribute(a)) throw ConfigError("config: attribute '" + a + "' is not defined by the dataset manifest");
  if (cfg.mitigation_attribute && !ds.has_attribute(*cfg.mitigation_attribute))
    throw ConfigError("config: mitigation attribute '" + *cfg.mitigation_attribute + "' is not defined");
  const SplitSpec sp = split(ds, cfg.split_seed);
  fs::create_directories(cfg.out);
  save_dataset(ds, cfg.out / kDataset);
  save_split(sp, cfg.out / kSplit);
  json groups = json::object();
  for (const auto& g : ds.groups()) {
    json sizes = json::object();
    for (std::size_t k = 0; k < g.size(); ++k) sizes[g.names[k]] = g.members[k].count();
    groups[g.attribute] = sizes;
  }
  write_json(cfg.out / "prepare.json", {{"dataset", ds.name()},
                                        {"n", ds.n()},
                                        {"features", ds.n_features()},
                                        {"feature_names", [&] {
                                           std::vector<std::string> v;
                                           for (const auto& f : ds.features()) v.push_back(f.name);
                                           return v;
                                         }()},
                                        {"train", sp.train.size()},
                                        {"test", sp.test.size()},
                                        {"groups", groups},
                                        {"warnings", ds.warnings}});
  write_json(cfg.out / "config.resolved.json", cfg.to_json());
  r.warnings = ds.warnings;
  log_line("prepared " + ds.name() + ": n=" + std::to_string(ds.n()) + ", features=" +
           std::to_string(ds.n_features()));
  return r;
}

CommandResult cmd_mine(const RunConfig& cfg) {
  cfg.validate();
  const Inputs in = load_inputs(cfg);
  const RuleUniverse u = mine_antecedents(in.ds, in.split.train, cfg.mining);
  save_universe(u, in.ds, cfg.out / kRules);
  log_line("mined " + std::to_string(u.size()) + " antecedents");
  return {};
}

namespace {

BuildConfig build_config(const RunConfig& cfg, std::size_t n_bootstrap) {
  BuildConfig b;
  b.n_bootstrap = n_bootstrap;
  b.base_seed = cfg.seed;
  b.forest = cfg.forest;
  b.workers = cfg.workers;
  return b;
}

std::string sanitize(const std::string& s) {
  std::string o;
  for (char ch : s) o += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.') ? ch : '_';
  return o;
}

void write_failures(const RashomonCollection& c, const fs::path& p) {
  auto os = open_out(p);
  csv::Writer w(os);
  w.row({"learner", "spec", "run", "message"});
  for (const auto& f : c.failures) w.row({f.learner, std::to_string(f.spec), std::to_string(f.run), f.message});
}

}  // namespace

CommandResult cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const Inputs in = load_inputs(cfg);
  const RuleUniverse u = load_rules(cfg, in);
  BuildConfig b = build_config(cfg, 0);
  b.keep_logs = true;
  const auto specs = cfg.learner_specs();
  const RashomonCollection c = build(in.ds, in.split, u, specs, b);
  const fs::path dir = cfg.out / "models";
  fs::create_directories(dir);
  auto os = open_out(cfg.out / "train.csv");
  csv::Writer w(os);
  w.row({"dataset", "learner", "method", "hyperparameters", "seed", "split", "model_id", "objective", "optimal",
         "rules", "train_transparency", "train_accuracy", "test_transparency", "test_accuracy"});
  for (const auto& m : c.members) {
    const std::string stem = sanitize(m.id);
    write_json(dir / (stem + ".json"), model_to_json(m.model, in.ds, m.model.blackbox->to_json()));
    {
      auto t = open_out(dir / (stem + ".txt"));
      t << render(m.model.prefix, in.ds);
    }
    {
      auto l = open_out(dir / (stem + ".log.jsonl"));
      for (const auto& rec : m.log) l << rec.dump() << "\n";
    }
    w.row({in.ds.name(), m.learner, m.model.provenance.method, m.model.provenance.hyperparameters.dump(),
           std::to_string(m.model.provenance.bootstrap_seed), split_tag(cfg, "train"), m.id, fmt(m.objective),
           m.optimal ? "1" : "0", std::to_string(m.model.prefix.size()), fmt(m.train_transparency),
           fmt(m.train_accuracy), fmt(transparency(m.model, in.ds, in.split.test)),
           fmt(accuracy(m.model, in.ds, in.split.test))});
  }
  write_failures(c, cfg.out / "train_failures.csv");
  log_line("trained " + std::to_string(c.members.size()) + " models, " + std::to_string(c.failures.size()) +
           " failures");
  return {{}, c.failures.size()};
}

CommandResult cmd_bootstrap(const RunConfig& cfg) {
  cfg.validate();
  const Inputs in = load_inputs(cfg);
  const RuleUniverse u = load_rules(cfg, in);
  const auto t0 = std::chrono::steady_clock::now();
  const RashomonCollection c = build(in.ds, in.split, u, cfg.learner_specs(), build_config(cfg, cfg.n_bootstrap));
  save_collection(c, in.ds, cfg.out / kCollection);
  write_failures(c, cfg.out / "bootstrap_failures.csv");
  std::size_t not_optimal = 0;
  for (const auto& m : c.members)
    if (!m.optimal && is_exact(method_from_string(m.model.provenance.method))) ++not_optimal;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log_line("bootstrap: " + std::to_string(c.members.size()) + " models (" + std::to_string(not_optimal) +
           " exact searches stopped by a limit), " + std::to_string(c.failures.size()) + " failures, " +
           fmt(std::round(secs * 10) / 10) + " s");
  return {{}, c.failures.size()};
}

// ---------------------------------------------------------------------------

namespace {

const Metric kAttrMetrics[] = {Metric::ICD, Metric::SP, Metric::EO};
const Metric kPlainMetrics[] = {Metric::Accuracy, Metric::Sparsity, Metric::Transparency};

}  // namespace

CommandResult cmd_audit(const RunConfig& cfg) {
  cfg.validate();
  const Inputs in = load_inputs(cfg);
  require(cfg.out / kCollection, "bootstrap");
  CommandResult res;
  const RashomonCollection raw = load_collection(in.ds, in.split, cfg.out / kCollection);
  RashomonCollection d = dedup(raw, cfg.agreement_threshold);
  assign_bins(d);
  const auto& ds = in.ds;
  const auto& test = in.split.test;
  const std::string name = ds.name();
  const std::string seed = std::to_string(cfg.seed);
  const std::string split = split_tag(cfg, "test");
  const fs::path dir = cfg.out / "audit";

  std::map<std::string, std::string> method_of;
  for (const auto& m : d.members) method_of.emplace(m.learner, m.model.provenance.method);

  {
    auto os = open_out(dir / "collection_summary.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "method", "seed", "split", "trained", "unique", "failures", "not_optimal"});
    for (const auto& L : raw.learners()) {
      std::size_t trained = 0, unique = 0, fails = 0, nonopt = 0;
      for (const auto& m : raw.members)
        if (m.learner == L) {
          ++trained;
          if (!m.optimal && is_exact(method_from_string(m.model.provenance.method))) ++nonopt;
        }
      for (const auto& m : d.members) unique += m.learner == L ? 1 : 0;
      for (const auto& f : raw.failures) fails += f.learner == L ? 1 : 0;
      w.row({name, L, method_of[L], seed, split_tag(cfg, "train"), std::to_string(trained), std::to_string(unique),
             std::to_string(fails), std::to_string(nonopt)});
    }
  }
  {
    auto os = open_out(dir / "growth.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "method", "seed", "split", "bin", "epsilon", "n_models"});
    for (const auto& L : d.learners()) {
      const auto curve = growth_curve(d, L, cfg.growth_epsilons);
      for (int b = 0; b < 4; ++b)
        for (std::size_t k = 0; k < curve.size(); ++k)
          w.row({name, L, method_of[L], seed, split_tag(cfg, "train"), bin_label(b), fmt(cfg.growth_epsilons[k]),
                 std::to_string(curve[k][static_cast<std::size_t>(b)])});
    }
  }

  auto dist_os = open_out(dir / "distributions.csv");
  csv::Writer dist(dist_os);
  dist.row({"dataset", "learner", "method", "hyperparameters", "seed", "split", "epsilon", "bin", "model_id",
            "attribute", "metric", "value"});
  auto gic_os = open_out(dir / "group_ic.csv");
  csv::Writer gic(gic_os);
  gic.row({"dataset", "learner", "method", "hyperparameters", "seed", "split", "epsilon", "bin", "model_id",
           "attribute", "group", "coverage"});
  auto ica_os = open_out(dir / "ica.csv");
  csv::Writer icaw(ica_os);
  icaw.row({"dataset", "learner", "method", "seed", "split", "epsilon", "bin", "n_models", "example", "icf", "ica"});
  auto ver_os = open_out(dir / "verdicts.csv");
  csv::Writer ver(ver_os);
  ver.row({"dataset", "learner", "method", "seed", "split", "attribute", "epsilon", "transition", "U", "p_raw",
           "p_adj", "direction"});

  std::map<std::string, std::vector<std::vector<stats::Direction>>> patterns;

  for (double eps : cfg.epsilons) {
    const RashomonCollection f = filter_epsilon(d, eps);
    const std::string e = fmt(eps);
    for (const auto& L : f.learners()) {
      const std::string method = method_of[L];
      std::map<std::string, std::array<std::vector<double>, 4>> icd_bins;
      for (int b = 0; b < 4; ++b) {
        const auto sel = f.select(L, b);
        if (sel.empty()) continue;
        const std::string bl = bin_label(b);
        auto emit = [&](const std::string& attr, Metric metric, const std::vector<double>& vals) {
          for (std::size_t k = 0; k < sel.size(); ++k) {
            const Member& m = f.members[sel[k]];
            dist.row({name, L, method, m.model.provenance.hyperparameters.dump(),
                      std::to_string(m.model.provenance.bootstrap_seed), split, e, bl, m.id, attr, to_string(metric),
                      fmt(vals[k])});
          }
        };
        for (Metric metric : kPlainMetrics) emit("", metric, member_metric(f, sel, metric, ds, test, ""));
        {
          std::vector<double> tt;
          for (auto i : sel) tt.push_back(f.members[i].train_transparency);
          for (std::size_t k = 0; k < sel.size(); ++k) {
            const Member& m = f.members[sel[k]];
            dist.row({name, L, method, m.model.provenance.hyperparameters.dump(),
                      std::to_string(m.model.provenance.bootstrap_seed), split_tag(cfg, "train"), e, bl, m.id, "",
                      "train_transparency", fmt(tt[k])});
            if (m.sample_icd)
              dist.row({name, L, method, m.model.provenance.hyperparameters.dump(),
                        std::to_string(m.model.provenance.bootstrap_seed), "bootstrap_sample", e, bl, m.id,
                        m.model.provenance.hyperparameters.value("attribute", ""), "sample_icd", fmt(*m.sample_icd)});
          }
        }
        for (const auto& attr : cfg.attributes) {
          for (Metric metric : kAttrMetrics) {
            try {
              const auto vals = member_metric(f, sel, metric, ds, test, attr);
              emit(attr, metric, vals);
              if (metric == Metric::ICD) icd_bins[attr][static_cast<std::size_t>(b)] = vals;
            } catch (const MetricError& err) {
              res.warnings.push_back(L + " " + bl + " " + attr + " " + to_string(metric) + ": " + err.what());
            }
          }
          const auto caps = member_captures(f, sel, ds, test);
          for (std::size_t k = 0; k < sel.size(); ++k) {
            const Member& m = f.members[sel[k]];
            for (const auto& g : group_rates(ds, test, attr, caps[k])) {
              gic.row({name, L, method, m.model.provenance.hyperparameters.dump(),
                       std::to_string(m.model.provenance.bootstrap_seed), split, e, bl, m.id, attr, g.group,
                       fmt(g.rate())});
            }
          }
        }
        const auto fvals = icf(f, sel, ds, test);
        for (std::size_t p = 0; p < test.size(); ++p)
          icaw.row({name, L, method, seed, split, e, bl, std::to_string(sel.size()), std::to_string(test[p]),
                    fmt(fvals[p]), fmt(ica(fvals[p]))});
      }
      for (const auto& attr : cfg.attributes) {
        const auto verdicts = stats::classify_transitions(icd_bins[attr], cfg.alpha);
        std::vector<stats::Direction> seq;
        for (const auto& v : verdicts) {
          const bool defined = v.direction != stats::Direction::Undefined;
          ver.row({name, L, method, seed, split, attr, e, bin_label(static_cast<int>(v.from)) + "->" +
                   bin_label(static_cast<int>(v.from) + 1),
                   defined ? fmt(v.u) : "", defined ? fmt(v.p_raw) : "", defined ? fmt(v.p_adjusted) : "",
                   stats::to_string(v.direction)});
          seq.push_back(v.direction);
        }
        patterns[L].push_back(seq);
      }
    }
  }
  {
    auto os = open_out(dir / "prevalence.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "method", "seed", "split", "settings", "bell_like", "bell_fraction",
           "mixed_fraction"});
    for (const auto& [L, table] : patterns) {
      if (table.empty()) continue;
      const auto p = stats::bell_prevalence(table);
      w.row({name, L, method_of[L], seed, split, std::to_string(p.settings), std::to_string(p.bell),
             fmt(p.bell_fraction), fmt(p.mixed_fraction)});
    }
  }
  log_line("audit: " + std::to_string(d.members.size()) + " unique models");
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct Key {
  std::vector<std::string> parts;
  auto operator<=>(const Key&) const = default;
};

csv::Table read_table(const fs::path& p) {
  require(p, "audit");
  return csv::read(p);
}

std::size_t col(const csv::Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw ConfigError("column '" + name + "' missing from audit table");
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

CommandResult cmd_report(const RunConfig& cfg) {
  cfg.validate();
  const fs::path a = cfg.out / "audit";
  const fs::path r = cfg.out / "report";
  const std::string seed = std::to_string(cfg.seed);
  const std::string split = split_tag(cfg, "test");

  // base learner and eta of every configured learner name
  std::map<std::string, std::pair<std::string, std::optional<double>>> lineage;
  for (const auto& e : cfg.learners) lineage[e.learner] = {e.learner, std::nullopt};
  for (double eta : cfg.etas)
    for (const auto& e : cfg.learners) lineage[constrained_name(e.learner, eta)] = {e.learner, eta};

  // learner, method, epsilon, attribute, metric, bin -> values
  const csv::Table dist = read_table(a / "distributions.csv");
  std::map<Key, std::vector<double>> groups;
  std::string dataset;
  {
    const auto cd = col(dist, "dataset"), cl = col(dist, "learner"), cm = col(dist, "method"),
               ce = col(dist, "epsilon"), ca = col(dist, "attribute"), cme = col(dist, "metric"),
               cb = col(dist, "bin"), cv = col(dist, "value");
    for (const auto& row : dist.rows) {
      dataset = row[cd];
      groups[{{row[cl], row[cm], row[ce], row[ca], row[cme], row[cb]}}].push_back(std::stod(row[cv]));
    }
  }
  auto summary_header = std::vector<std::string>{"dataset", "learner", "method", "hyperparameters", "seed", "split",
                                                 "epsilon", "attribute", "metric", "bin", "n_models", "min", "q1",
                                                 "median", "mean", "q3", "max"};
  {
    auto all_os = open_out(r / "bin_summaries.csv");
    auto fig2_os = open_out(r / "fig2_icd.csv");
    csv::Writer all(all_os), fig2(fig2_os);
    all.row(summary_header);
    fig2.row(summary_header);
    for (const auto& [k, vals] : groups) {
      const Summary s = summarize(vals);
      std::vector<std::string> row{dataset,     k.parts[0],   k.parts[1],          "grid",       seed,
                                   split,       k.parts[2],   k.parts[3],          k.parts[4],   k.parts[5],
                                   std::to_string(vals.size()), fmt(s.min), fmt(s.q1), fmt(s.median), fmt(s.mean),
                                   fmt(s.q3),   fmt(s.max)};
      all.row(row);
      if (k.parts[4] == "icd") fig2.row(row);
    }
  }
  {
    const csv::Table t = read_table(a / "group_ic.csv");
    const auto cl = col(t, "learner"), cm = col(t, "method"), ce = col(t, "epsilon"), cb = col(t, "bin"),
               ca = col(t, "attribute"), cg = col(t, "group"), cv = col(t, "coverage");
    std::map<Key, std::vector<double>> acc;
    for (const auto& row : t.rows)
      acc[{{row[cl], row[cm], row[ce], row[ca], row[cb], row[cg]}}].push_back(std::stod(row[cv]));
    auto os = open_out(r / "fig3_group_ic.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "method", "hyperparameters", "seed", "split", "epsilon", "attribute", "bin", "group",
           "n_models", "mean_coverage"});
    for (const auto& [k, v] : acc)
      w.row({dataset, k.parts[0], k.parts[1], "grid", seed, split, k.parts[2], k.parts[3], k.parts[4], k.parts[5],
             std::to_string(v.size()), fmt(mean_of(v))});
  }
  {
    const csv::Table t = read_table(a / "ica.csv");
    const auto cl = col(t, "learner"), cm = col(t, "method"), ce = col(t, "epsilon"), cb = col(t, "bin"),
               cn = col(t, "n_models"), cv = col(t, "ica");
    std::map<Key, std::vector<double>> acc;
    for (const auto& row : t.rows) acc[{{row[cl], row[cm], row[ce], row[cb], row[cn]}}].push_back(std::stod(row[cv]));
    auto os = open_out(r / "fig4_ica.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "method", "hyperparameters", "seed", "split", "epsilon", "bin", "n_models",
           "n_examples", "min", "q1", "median", "mean", "q3", "max", "share_nonzero"});
    for (const auto& [k, v] : acc) {
      const Summary s = summarize(v);
      const auto nz = std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; });
      w.row({dataset, k.parts[0], k.parts[1], "grid", seed, split, k.parts[2], k.parts[3], k.parts[4],
             std::to_string(v.size()), fmt(s.min), fmt(s.q1), fmt(s.median), fmt(s.mean), fmt(s.q3), fmt(s.max),
             fmt(static_cast<double>(nz) / static_cast<double>(v.size()))});
    }
  }
  auto mean_for = [&](const std::string& learner, const std::string& eps, const std::string& attr,
                      const std::string& metric, const std::string& bin) -> std::optional<double> {
    for (const auto& [k, v] : groups)
      if (k.parts[0] == learner && k.parts[2] == eps && k.parts[3] == attr && k.parts[4] == metric &&
          k.parts[5] == bin)
        return mean_of(v);
    return std::nullopt;
  };
  auto opt = [](std::optional<double> v) { return v ? fmt(*v) : std::string(); };
  {
    auto os = open_out(r / "fig5_6_mitigation.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "constrained_learner", "hyperparameters", "seed", "split", "epsilon", "eta",
           "attribute", "metric", "bin", "unconstrained_mean", "constrained_mean"});
    if (cfg.mitigation_attribute) {
      const std::string ma = *cfg.mitigation_attribute;
      for (double eta : cfg.etas)
        for (const auto& e : cfg.learners) {
          if (!is_exact(e.method)) continue;
          const std::string cn = constrained_name(e.learner, eta);
          for (double eps : cfg.epsilons)
            for (const char* metric : {"icd", "sp", "eo", "accuracy", "sparsity"}) {
              const bool per_attr = std::string(metric) == "icd" || std::string(metric) == "sp" ||
                                    std::string(metric) == "eo";
              const std::string attr = per_attr ? ma : "";
              for (int b = 0; b < 4; ++b) {
                const auto u = mean_for(e.learner, fmt(eps), attr, metric, bin_label(b));
                const auto c = mean_for(cn, fmt(eps), attr, metric, bin_label(b));
                if (!u && !c) continue;
                w.row({dataset, e.learner, cn, "grid", seed, split, fmt(eps), fmt(eta), attr, metric, bin_label(b),
                       opt(u), opt(c)});
              }
            }
        }
    }
  }
  {
    auto os = open_out(r / "fig7_eta_sweep.csv");
    csv::Writer w(os);
    w.row({"dataset", "learner", "hyperparameters", "seed", "split", "epsilon", "eta", "attribute", "bin",
           "mean_icd", "mean_accuracy", "mean_sparsity"});
    if (cfg.mitigation_attribute) {
      const std::string ma = *cfg.mitigation_attribute;
      for (const auto& e : cfg.learners) {
        if (!is_exact(e.method)) continue;
        std::vector<std::pair<std::string, std::string>> rows{{"1", e.learner}};
        for (double eta : cfg.etas) rows.push_back({fmt(eta), constrained_name(e.learner, eta)});
        for (double eps : cfg.epsilons)
          for (const auto& [eta, ln] : rows)
            for (int b = 0; b < 4; ++b) {
              const auto icd_m = mean_for(ln, fmt(eps), ma, "icd", bin_label(b));
              if (!icd_m) continue;
              w.row({dataset, e.learner, "grid", seed, split, fmt(eps), eta, ma, bin_label(b), opt(icd_m),
                     opt(mean_for(ln, fmt(eps), "", "accuracy", bin_label(b))),
                     opt(mean_for(ln, fmt(eps), "", "sparsity", bin_label(b)))});
            }
      }
    }
  }
  fs::create_directories(r);
  fs::copy_file(a / "growth.csv", r / "appB_growth.csv", fs::copy_options::overwrite_existing);
  fs::copy_file(a / "prevalence.csv", r / "table1_prevalence.csv", fs::copy_options::overwrite_existing);
  fs::copy_file(a / "verdicts.csv", r / "table1_verdicts.csv", fs::copy_options::overwrite_existing);
  log_line("report written to " + r.string());
  return {};
}

CommandResult run_all(const RunConfig& cfg) {
  CommandResult total;
  for (auto* fn : {cmd_prepare, cmd_mine, cmd_bootstrap, cmd_audit, cmd_report}) {
    auto r = fn(cfg);
    total.warnings.insert(total.warnings.end(), r.warnings.begin(), r.warnings.end());
    total.failures += r.failures;
  }
  return total;
}

// ---------------------------------------------------------------------------

fs::path write_synthetic(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  fs::create_directories(dir);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto os = open_out(dir / "synthetic.csv");
  csv::Writer w(os);
  w.row({"age", "priors", "score", "sex", "charge", "group", "label"});
  for (std::size_t i = 0; i < n; ++i) {
    const double g = unit(rng);
    const int group = g < 0.5 ? 0 : (g < 0.8 ? 1 : 2);
    const int age = 18 + static_cast<int>(unit(rng) * (group == 2 ? 25 : 50));
    int priors = 0;
    const double stop = group == 0 ? 0.55 : (group == 1 ? 0.35 : 0.2);
    while (priors < 15 && unit(rng) > stop) ++priors;
    const bool male = unit(rng) < (group == 2 ? 0.75 : 0.6);
    const bool felony = unit(rng) < (group == 0 ? 0.4 : 0.65);
    const double z = -1.2 + 0.35 * priors - 0.04 * (age - 35) + 0.6 * (felony ? 1 : 0) + (male ? 0.3 : 0.0);
    const bool y = unit(rng) < 1.0 / (1.0 + std::exp(-z));
    const int score = std::clamp(static_cast<int>(1 + 10 * unit(rng) * 0.5 + (y ? 4 : 0)), 1, 10);
    w.row({std::to_string(age), std::to_string(priors), std::to_string(score), male ? "M" : "F", felony ? "F" : "M",
           std::string(1, static_cast<char>('A' + group)), y ? "1" : "0"});
  }
  const json manifest{{"name", "synthetic"},
                      {"csv", "synthetic.csv"},
                      {"label", "label"},
                      {"positive_value", "1"},
                      {"numeric", {"age", "priors", "score"}},
                      {"categorical", {"sex", "charge"}},
                      {"n_bins", 3},
                      {"sensitive",
                       {{{"name", "Group"}, {"column", "group"}, {"keep", {"A", "B", "C"}}, {"other", false}},
                        {{"name", "Sex"}, {"column", "sex"}, {"top", 2}, {"other", false}}}}};
  write_json(dir / "synthetic.json", manifest);
  return dir / "synthetic.json";
}

}  // namespace hicd
