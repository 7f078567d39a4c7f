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

#ifndef SOMNUS_CLI_COMMANDS_HPP_
#define SOMNUS_CLI_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "somnus/cli/config.hpp"

namespace somnus::cli {

// Everything a command needs beyond its configuration.
struct CommandContext {
  std::string command;
  ConfigValues values;
  std::filesystem::path out_dir;
  std::size_t jobs = 1;
  bool resume = false;
  std::optional<std::int64_t> stop_after_epoch;
  std::ostream* console = nullptr;  // progress and summaries; null for silence
};

// runs/<command>-YYYYMMDD-HHMMSS under `root`, in local time.
std::filesystem::path timestamped_run_dir(const std::filesystem::path& root,
                                          std::string_view command);

// Prints the EDF header and, when stage annotations are available (the file
// itself is an EDF+ hypnogram, or `hypnogram` is given), per-stage epoch
// counts with percentages. Wake trimming follows `settings`.
void inspect_edf(const std::filesystem::path& path,
                 const std::optional<std::filesystem::path>& hypnogram,
                 const IngestSettings& settings, std::ostream& os);

// Spectral demo corpus written as an epoch store (no network, no PhysioNet).
struct SyntheticOptions {
  std::size_t subjects = 20;
  std::size_t epochs_per_subject = 100;
  double sampling_rate = 64.0;
  double epoch_seconds = 4.0;
};
void cmd_synth(const CommandContext& ctx, const SyntheticOptions& options);

void cmd_ingest(const CommandContext& ctx);
void cmd_train_gan(const CommandContext& ctx);
void cmd_generate(const CommandContext& ctx);
void cmd_train_clf(const CommandContext& ctx);
void cmd_cv(const CommandContext& ctx);
void cmd_sweep_m(const CommandContext& ctx);

// manifest.json: command, resolved configuration and every file under the
// run directory with its size and FNV-1a digest. Carries no timestamps, worker
// counts or resume flags, so reruns and resumed runs stay byte-identical.
void write_manifest(const CommandContext& ctx);

// Maps an exception escaping a command to the documented exit status.
int exit_code_for_exception(const std::exception& error);

}  // namespace somnus::cli

#endif  // SOMNUS_CLI_COMMANDS_HPP_
