// Command-line front end. Links only the public C API.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "patchlesion.h"

namespace {

struct ConfigDeleter {
  void operator()(pla_config* c) const { pla_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<pla_config, ConfigDeleter>;

int fail(pla_status status) {
  std::fprintf(stderr, "error: %s\n", pla_last_error());
  return static_cast<int>(status);
}

// Builds a config from an optional file plus repeated key=value overrides.
ConfigPtr build_config(const std::string& config_file,
                       const std::vector<std::string>& overrides,
                       pla_status* status) {
  ConfigPtr cfg(pla_config_create());
  if (!cfg) {
    *status = PLA_ERR_RUNTIME;
    return nullptr;
  }
  if (!config_file.empty()) {
    *status = pla_config_load_file(cfg.get(), config_file.c_str());
    if (*status != PLA_OK) return nullptr;
  }
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      *status = PLA_ERR_CONFIG;
      return nullptr;
    }
    *status = pla_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                             kv.substr(eq + 1).c_str());
    if (*status != PLA_OK) return nullptr;
  }
  *status = PLA_OK;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patch-based skin lesion classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pla_version()));

  std::string config_file;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_file, "Configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides,
                 "Override a configuration key (key=value, repeatable)");

  auto* train = app.add_subcommand("train", "Train a model");

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Train/evaluate along one axis");
  sweep->add_option("axis", axis,
                    "Axis: k, p_d, n_crops, balancing or aggregator")
      ->required();
  sweep->add_option("values", values, "Axis values")->required();

  auto* gradcheck =
      app.add_subcommand("gradcheck", "Verify gradients against finite differences");

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic dataset");

  CLI11_PARSE(app, argc, argv);

  pla_status status = PLA_OK;
  auto cfg = build_config(config_file, overrides, &status);
  if (!cfg) return fail(status);

  if (train->parsed()) {
    status = pla_train(cfg.get());
    if (status != PLA_OK) return fail(status);
  } else if (eval->parsed()) {
    status = pla_eval(cfg.get(), checkpoint.c_str());
    if (status != PLA_OK) return fail(status);
  } else if (sweep->parsed()) {
    std::vector<const char*> raw;
    for (const auto& v : values) raw.push_back(v.c_str());
    status = pla_sweep(cfg.get(), axis.c_str(), raw.data(), raw.size());
    if (status != PLA_OK) return fail(status);
  } else if (gradcheck->parsed()) {
    std::string report(8192, '\0');
    int failures = 0;
    status = pla_gradcheck(cfg.get(), report.data(), report.size(), &failures);
    if (status != PLA_OK) return fail(status);
    std::fputs(report.c_str(), stdout);
    if (failures > 0) {
      std::fprintf(stderr, "%d gradient check(s) failed\n", failures);
      return 1;
    }
  } else if (gen->parsed()) {
    std::string report(8192, '\0');
    status = pla_gen_synth(cfg.get(), report.data(), report.size());
    if (status != PLA_OK) return fail(status);
    std::fputs(report.c_str(), stdout);
  }
  return 0;
}
