// Copyright 2026 The Somnus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// somnus: command-line entry point.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "somnus/cli/commands.hpp"
#include "somnus/cli/config.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/log.hpp"

namespace {

struct CommonFlags {
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::optional<long long> seed;
  std::size_t jobs = 1;
  bool resume = false;
  std::optional<std::string> ablation;
  std::optional<std::string> out;
  std::optional<std::int64_t> stop_after;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool training) {
  cmd->add_option("-c,--config", f.configs, "configuration file (repeatable, later wins)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override one key, as key=value (repeatable)");
  cmd->add_option("--seed", f.seed, "root seed (overrides the seed key)");
  cmd->add_option("--out", f.out, "output directory (default runs/<command>-<time>)");
  cmd->add_flag("-q,--quiet", f.quiet, "no progress output");
  if (training) {
    cmd->add_option("-j,--jobs", f.jobs, "parallel workers")->check(CLI::PositiveNumber);
    cmd->add_flag("--resume", f.resume, "continue from the last checkpoint in --out");
    cmd->add_option("--stop-after-epoch", f.stop_after,
                    "stop once this (zero-based) epoch has finished");
  }
}

somnus::cli::CommandContext make_context(const std::string& name, const CommonFlags& f) {
  somnus::cli::CommandContext ctx;
  ctx.command = name;
  for (const auto& path : f.configs) ctx.values.load_file(path);
  for (const auto& s : f.sets) ctx.values.set_assignment(s);
  if (f.seed) ctx.values.set("seed", std::to_string(*f.seed), "--seed", {});
  if (f.ablation) ctx.values.set("cv.ablation", *f.ablation, "--ablation", {});
  if (f.resume && !f.out) {
    throw somnus::ConfigError("--resume needs --out pointing at the interrupted run");
  }
  ctx.out_dir = f.out ? std::filesystem::path(*f.out)
                      : somnus::cli::timestamped_run_dir(std::filesystem::current_path(), name);
  ctx.jobs = f.jobs;
  ctx.resume = f.resume;
  ctx.stop_after_epoch = f.stop_after;
  ctx.console = f.quiet ? nullptr : &std::cout;
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"somnus: single-channel EEG sleep staging with GAN rebalancing and "
               "checkpoint ensembles"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", "somnus 0.1.0");
  bool list_keys = false;
  app.add_flag("--list-keys", list_keys, "print every configuration key as a Markdown table");

  CommonFlags flags;
  std::string edf_path;
  std::optional<std::string> hypnogram;
  somnus::cli::SyntheticOptions synth;

  auto* inspect = app.add_subcommand("inspect-edf", "print an EDF header and stage counts");
  inspect->add_option("path", edf_path, "EDF or EDF+ file")->required();
  inspect->add_option("--hypnogram", hypnogram, "hypnogram matching the recording");
  inspect->add_option("-c,--config", flags.configs, "configuration file")
      ->check(CLI::ExistingFile);
  inspect->add_option("--set", flags.sets, "override one key, as key=value");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic spectral epoch store");
  add_common(synth_cmd, flags, false);
  synth_cmd->add_option("--subjects", synth.subjects, "number of subjects");
  synth_cmd->add_option("--epochs-per-subject", synth.epochs_per_subject, "epochs per subject");
  synth_cmd->add_option("--sampling-rate", synth.sampling_rate, "Hz");
  synth_cmd->add_option("--epoch-seconds", synth.epoch_seconds, "seconds per epoch");

  auto* ingest = app.add_subcommand("ingest", "segment EDF recordings into an epoch store");
  add_common(ingest, flags, false);
  auto* train_gan = app.add_subcommand("train-gan", "train the minority-class GAN");
  add_common(train_gan, flags, true);
  auto* generate = app.add_subcommand("generate", "sample epochs from a trained generator");
  add_common(generate, flags, false);
  auto* train_clf = app.add_subcommand("train-clf", "train one classifier and its checkpoint bank");
  add_common(train_clf, flags, true);
  auto* cv = app.add_subcommand("cv", "subject-wise cross-validation");
  add_common(cv, flags, true);
  cv->add_option("--ablation", flags.ablation, "naive, egan, ensemble or full")
      ->check(CLI::IsMember({"naive", "egan", "ensemble", "full"}));
  auto* sweep = app.add_subcommand("sweep-m", "ensemble-size sweep over cached predictions");
  add_common(sweep, flags, false);
  std::optional<std::string> cv_dir;
  sweep->add_option("--cv-dir", cv_dir, "cv output directory (sets sweep.cv_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (list_keys) {
    std::cout << somnus::cli::format_key_reference();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  if (flags.quiet) somnus::log::set_level(somnus::log::Level::kWarn);
  try {
    if (cv_dir) flags.sets.push_back("sweep.cv_dir=" + *cv_dir);
    if (inspect->parsed()) {
      somnus::cli::ConfigValues values;
      for (const auto& path : flags.configs) values.load_file(path);
      for (const auto& s : flags.sets) values.set_assignment(s);
      const auto config = somnus::cli::resolve_run_config(values);
      std::optional<std::filesystem::path> hyp;
      if (hypnogram) hyp = *hypnogram;
      somnus::cli::inspect_edf(edf_path, hyp, config.ingest, std::cout);
      return 0;
    }
    CLI::App* chosen = app.get_subcommands().front();
    const auto ctx = make_context(chosen->get_name(), flags);
    // Validate everything before creating the run directory.
    (void)somnus::cli::resolve_run_config(ctx.values);
    std::filesystem::create_directories(ctx.out_dir);
    if (chosen == synth_cmd) {
      somnus::cli::cmd_synth(ctx, synth);
    } else if (chosen == ingest) {
      somnus::cli::cmd_ingest(ctx);
    } else if (chosen == train_gan) {
      somnus::cli::cmd_train_gan(ctx);
    } else if (chosen == generate) {
      somnus::cli::cmd_generate(ctx);
    } else if (chosen == train_clf) {
      somnus::cli::cmd_train_clf(ctx);
    } else if (chosen == cv) {
      somnus::cli::cmd_cv(ctx);
    } else {
      somnus::cli::cmd_sweep_m(ctx);
    }
    somnus::cli::write_manifest(ctx);
    if (ctx.console) *ctx.console << "outputs in " << ctx.out_dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "somnus: error: " << e.what() << '\n';
    return somnus::cli::exit_code_for_exception(e);
  }
}
