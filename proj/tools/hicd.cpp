#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hicd/pipeline.hpp"

namespace {

template <typename T>
void set_if(std::optional<T>& dst, CLI::Option* opt, const T& value) {
  if (opt->count() > 0) dst = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretability-coverage audit of hybrid rule/black-box models"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int workers = 0;
  std::uint64_t seed = 0;
  double time_limit = 0;
  std::size_t memory_limit = 0;
  double eta = 0;
  double epsilon = 0;
  std::string attribute;

  app.add_option("--config", config, "Run configuration JSON")->envname("HICD_CONFIG");
  auto* o_out = app.add_option("--out", out, "Output directory")->envname("HICD_OUT");
  auto* o_workers = app.add_option("--workers", workers, "Worker threads for bootstrap training (0 = all cores)")
                        ->envname("HICD_WORKERS")
                        ->check(CLI::NonNegativeNumber);
  auto* o_seed = app.add_option("--seed", seed, "Base seed for resampling and black boxes")->envname("HICD_SEED");
  auto* o_time = app.add_option("--time-limit", time_limit, "Per-search time limit in seconds")
                     ->envname("HICD_TIME_LIMIT");
  auto* o_mem = app.add_option("--memory-limit", memory_limit, "Per-search memory limit in bytes")
                    ->envname("HICD_MEMORY_LIMIT");
  auto* o_eta = app.add_option("--eta", eta, "Maximum ICD for the constrained learners")
                    ->envname("HICD_ETA")
                    ->check(CLI::Range(0.0, 1.0));
  auto* o_eps = app.add_option("--epsilon", epsilon, "Rashomon tolerance")->envname("HICD_EPSILON");
  auto* o_attr = app.add_option("--attribute", attribute, "Sensitive attribute to constrain")
                     ->envname("HICD_ATTRIBUTE");

  struct Command {
    const char* name;
    const char* help;
    hicd::CommandResult (*fn)(const hicd::RunConfig&);
  };
  const Command commands[] = {
      {"prepare", "Binarize the dataset and draw the train/test split", hicd::cmd_prepare},
      {"mine", "Mine the candidate antecedents", hicd::cmd_mine},
      {"train", "Train one model per learner and hyperparameter value", hicd::cmd_train},
      {"bootstrap", "Build the bootstrap model collection", hicd::cmd_bootstrap},
      {"audit", "Dedup, bin, filter and compute ICD/ICF/ICA, fairness and test verdicts", hicd::cmd_audit},
      {"report", "Emit plot-ready tables", hicd::cmd_report},
      {"all", "prepare, mine, bootstrap, audit and report", hicd::run_all},
  };
  const Command* chosen = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->callback([&chosen, &c] { chosen = &c; });
  }
  std::string synth_dir;
  std::size_t synth_n = 500;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic CSV and dataset manifest");
  synth->add_option("dir", synth_dir, "Target directory")->required();
  synth->add_option("-n,--rows", synth_n, "Number of rows");
  synth->add_option("--data-seed", synth_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      std::cout << hicd::write_synthetic(synth_dir, synth_n, synth_seed).string() << "\n";
      return 0;
    }
    if (config.empty()) throw hicd::ConfigError("--config is required");
    hicd::RunConfig cfg = hicd::RunConfig::load(config);
    hicd::Overrides ov;
    set_if(ov.out, o_out, std::filesystem::path(out));
    set_if(ov.workers, o_workers, workers);
    set_if(ov.seed, o_seed, seed);
    set_if(ov.time_limit, o_time, time_limit);
    set_if(ov.memory_limit, o_mem, memory_limit);
    set_if(ov.eta, o_eta, eta);
    set_if(ov.epsilon, o_eps, epsilon);
    set_if(ov.attribute, o_attr, attribute);
    ov.apply(cfg);
    const auto res = chosen->fn(cfg);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    if (res.failures > 0) {
      std::cerr << "error: " << res.failures << " training runs failed (see *_failures.csv)\n";
      return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
