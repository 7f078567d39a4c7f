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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "somnus/clf/classifier.hpp"
#include "somnus/data/epoch.hpp"
#include "somnus/data/pipeline.hpp"
#include "somnus/eval/cv.hpp"
#include "somnus/gan/egan.hpp"

namespace somnus::cli {

enum class ValueKind { kString, kPath, kInt, kReal, kBool, kRealList, kIntList };

struct KeySpec {
  std::string_view key;
  ValueKind kind;
  std::string_view default_value;  // empty means unset
  std::string_view help;
};

// Every accepted configuration key, in documentation order.
std::span<const KeySpec> config_keys();
const KeySpec* find_key(std::string_view key);

// Layered key = value settings. Later assignments win. Files may contain
//   # comments
//   include other.conf        (path relative to the including file)
//   [section]                 (prefixes following keys with "section.")
//   key = value
// Unknown keys, malformed lines and include cycles are ConfigErrors that
// name the file and line.
class ConfigValues {
 public:
  ConfigValues();

  void load_file(const std::filesystem::path& path);
  void load_text(std::string_view text, const std::filesystem::path& base_dir,
                 std::string_view source);
  // "key=value" as given on the command line.
  void set_assignment(std::string_view assignment);
  void set(std::string_view key, std::string value, std::string source,
           std::filesystem::path base_dir = {});

  bool has(std::string_view key) const;  // set to a non-empty value
  std::string get_string(std::string_view key) const;
  std::filesystem::path get_path(std::string_view key) const;
  long long get_int(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  double get_real(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<double> get_reals(std::string_view key) const;
  std::vector<std::size_t> get_sizes(std::string_view key) const;

  // Sorted "key = value" lines of every key, resolved paths included.
  std::string dump() const;

 private:
  struct Entry {
    std::string value;
    std::string source;
    std::filesystem::path base_dir;
  };
  const Entry& entry(std::string_view key) const;
  [[noreturn]] void bad_value(std::string_view key, std::string_view why) const;
  void load_file_impl(const std::filesystem::path& path,
                      std::vector<std::filesystem::path>& stack);
  void load_text_impl(std::string_view text, const std::filesystem::path& base_dir,
                      std::string_view source, std::vector<std::filesystem::path>& stack);

  std::map<std::string, Entry, std::less<>> entries_;
};

struct IngestSettings {
  std::filesystem::path manifest;   // TSV: psg path, hypnogram path
  std::string channel;
  double epoch_seconds = 30.0;
  bool trim_wake = true;
  double trim_minutes = 30.0;
  std::optional<std::filesystem::path> allowlist;
  bool normalize = true;
};

// Everything a command needs, validated before any computation. Sampling
// rate and epoch length come from the epoch store at run time.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> data_store;
  IngestSettings ingest;

  std::size_t k_folds = 20;
  double val_fraction = 0.1;
  data::RebalanceConfig rebalance;
  bool keep_class_weights = true;

  std::size_t gan_noise_dim = 100;
  std::array<std::size_t, 4> gan_filters{64, 64, 128, 128};
  std::size_t gan_hidden = 128;
  double gan_slope = 0.2;
  gan::GanTrainConfig gan;

  std::array<std::size_t, 3> clf_filters{128, 128, 256};
  std::size_t clf_hidden = 128;
  double clf_dropout = 0.5;
  clf::ClfTrainConfig clf;
  std::optional<std::filesystem::path> clf_generator;

  std::size_t ensemble_m = 10;
  std::size_t cache_members = 10;
  std::vector<std::size_t> sweep_sizes{5, 6, 7, 8, 9, 10};
  std::optional<std::filesystem::path> sweep_cv_dir;
  eval::Ablation ablation = eval::Ablation::kFull;

  std::size_t generate_count = 0;
  std::optional<std::filesystem::path> generate_checkpoint;

  std::size_t diagnostics_count = 256;
};

RunConfig resolve_run_config(const ConfigValues& values);

gan::GanArchitecture gan_architecture(const RunConfig& config, const EpochStore& store);
clf::ClassifierArchitecture classifier_architecture(const RunConfig& config,
                                                    const EpochStore& store);
eval::CvConfig cv_config(const RunConfig& config, const EpochStore& store,
                         std::size_t jobs);

// Markdown table of every key for the README.
std::string format_key_reference();

}  // namespace somnus::cli
