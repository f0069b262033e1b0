// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the localization pipeline. Every subcommand is
// a thin wrapper around eval::run_experiment with the stage list fixed to
// the chosen step; `run` executes the stage list named in the config file
// (default: the full pipeline).

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "vgloc/error.hpp"
#include "vgloc/evalharness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CliOptions {
  std::string config_path;
  std::string out;
  std::string dataset;
  long seed = -1;
  double spacing_m = -1;
  double dmax_m = -1;
};

void add_common_flags(CLI::App* cmd, CliOptions* opt) {
  cmd->add_option("--config", opt->config_path,
                  "key=value configuration file");
  cmd->add_option("--out", opt->out, "artifact output directory");
  cmd->add_option("--dataset", opt->dataset,
                  "dataset directory (overrides the config's data root)");
  cmd->add_option("--seed", opt->seed, "RNG seed (overrides the config)");
  cmd->add_option("--spacing-m", opt->spacing_m,
                  "keyframe sampling spacing in meters");
  cmd->add_option("--dmax-m", opt->dmax_m,
                  "maximum key/live pairing distance in meters");
}

vgloc::eval::Config build_config(const CliOptions& opt,
                                 const std::string& stages) {
  vgloc::eval::Config cfg;
  if (!opt.config_path.empty()) cfg = vgloc::eval::load_config(opt.config_path);
  if (!opt.out.empty()) cfg.kv["out"] = opt.out;
  if (!opt.dataset.empty()) cfg.kv["dataset"] = opt.dataset;
  if (opt.seed >= 0) cfg.kv["seed"] = std::to_string(opt.seed);
  char buf[32];
  if (opt.spacing_m >= 0) {
    std::snprintf(buf, sizeof(buf), "%.17g", opt.spacing_m);
    cfg.kv["spacing_m"] = buf;
  }
  if (opt.dmax_m >= 0) {
    std::snprintf(buf, sizeof(buf), "%.17g", opt.dmax_m);
    cfg.kv["dmax_m"] = buf;
  }
  if (!stages.empty()) {
    cfg.kv["stages"] = stages;
  } else if (cfg.kv.find("stages") == cfg.kv.end()) {
    cfg.kv["stages"] = "synth,train-wnn,train-cnn,localize,eval";
  }
  return cfg;
}

int exit_code_for(vgloc::ErrorCode code) {
  switch (code) {
    case vgloc::ErrorCode::ConfigError:
      return kExitConfig;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vgloc: visual global localization pipeline"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    const char* stages;  // "" = take the stage list from the config
  };
  const Sub subs[] = {
      {"synth", "generate the synthetic lap dataset", "synth"},
      {"train-wnn", "train the place-recognition network", "train-wnn"},
      {"train-cnn", "train the relative-pose regressor", "train-cnn"},
      {"localize", "run localization over the test lap", "localize"},
      {"eval", "compute accuracy and error statistics", "eval"},
      {"run", "run the configured stage list", ""},
  };

  CliOptions opt;
  for (const Sub& s : subs) {
    add_common_flags(app.add_subcommand(s.name, s.help), &opt);
  }

  CLI11_PARSE(app, argc, argv);

  const CLI::App* chosen = app.get_subcommands().front();
  std::string stages;
  for (const Sub& s : subs) {
    if (chosen->get_name() == s.name) stages = s.stages;
  }

  try {
    vgloc::eval::run_experiment(build_config(opt, stages));
  } catch (const vgloc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
