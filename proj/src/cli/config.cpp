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

#include "somnus/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/core/text.hpp"

namespace somnus::cli {

namespace {

using K = ValueKind;

constexpr KeySpec kKeys[] = {
    {"seed", K::kInt, "0", "root seed; every random stream is derived from it"},
    {"data.store", K::kPath, "", "epoch store (SEGD) read by training commands"},

    {"ingest.manifest", K::kPath, "", "TSV of recordings: PSG path, hypnogram path"},
    {"ingest.channel", K::kString, "EEG Fpz-Cz", "EEG channel label to extract"},
    {"epoch_seconds", K::kReal, "30", "epoch length in seconds"},
    {"ingest.trim_wake", K::kBool, "true", "trim long wake periods at both ends"},
    {"ingest.trim_minutes", K::kReal, "30", "wake minutes kept before and after sleep"},
    {"ingest.allowlist", K::kPath, "", "optional file of subject ids to keep"},
    {"ingest.normalize", K::kBool, "true", "robust per-recording scaling to [-1, 1]"},

    {"k_folds", K::kInt, "20", "subject-wise cross-validation folds"},
    {"val_fraction", K::kReal, "0.1", "share of training subjects held out for validation"},
    {"sequence_length", K::kInt, "20", "epochs per classifier sequence (alias clf.sequence_length)"},
    {"rebalance.policy", K::kString, "second_smallest",
     "minority target: none, second_smallest or target_count"},
    {"rebalance.target_count", K::kInt, "0", "minority target for target_count"},
    {"rebalance.keep_class_weights", K::kBool, "true",
     "keep classifier class weights when generated epochs are added"},
    {"augment.signal", K::kBool, "true", "random circular shift of each training sequence"},
    {"augment.max_shift", K::kInt, "0", "largest shift in samples; 0 means half an epoch"},
    {"augment.sequence", K::kBool, "true", "random start offset per training stream"},

    {"gan.noise_dim", K::kInt, "100", "generator noise size"},
    {"gan.filters", K::kIntList, "64,64,128,128", "filters of the four conv blocks"},
    {"gan.hidden", K::kInt, "128", "LSTM hidden size"},
    {"gan.slope", K::kReal, "0.2", "leaky ReLU slope"},
    {"gan.lr", K::kReal, "0.0002", "Adam learning rate"},
    {"gan.d_lr", K::kReal, "0", "discriminator learning rate; 0 reuses gan.lr"},
    {"gan.beta1", K::kReal, "0.5", "Adam beta1"},
    {"gan.beta2", K::kReal, "0.999", "Adam beta2"},
    {"gan.batch_size", K::kInt, "16", "mini-batch size"},
    {"gan.epochs", K::kInt, "660", "training epochs"},
    {"gan.seed", K::kInt, "", "GAN seed; derived from seed when unset"},
    {"gan.target_stage", K::kString, "N1", "stage the GAN learns (W, N1, N2, N3, REM)"},
    {"gan.d_steps", K::kInt, "1", "discriminator updates per generator update"},
    {"gan.checkpoint_every", K::kInt, "0", "generator snapshot period in epochs; 0 disables"},
    {"gan.real_label", K::kReal, "1", "discriminator target for real epochs"},
    {"gan.instance_noise", K::kReal, "0", "std of noise on discriminator inputs at the start"},
    {"gan.instance_noise_final", K::kReal, "0", "std of that noise at the last epoch"},
    {"gan.diagnostics_count", K::kInt, "256", "generated epochs compared in diagnostics"},

    {"clf.filters", K::kIntList, "128,128,256", "filters of conv blocks 1, 2-3 and 4-5"},
    {"clf.hidden", K::kInt, "128", "LSTM hidden size"},
    {"clf.dropout", K::kReal, "0.5", "dropout rate"},
    {"clf.lr", K::kReal, "0.0001", "Adam learning rate"},
    {"clf.beta1", K::kReal, "0.9", "Adam beta1"},
    {"clf.beta2", K::kReal, "0.999", "Adam beta2"},
    {"clf.epochs", K::kInt, "200", "training epochs (one checkpoint each)"},
    {"clf.batch_size", K::kInt, "8", "sequences per mini-batch"},
    {"clf.weights", K::kRealList, "1,1.5,1,1,1", "cross-entropy weights for W, N1, N2, N3, REM"},
    {"clf.clip_norm", K::kReal, "5", "global gradient-norm clip"},
    {"clf.seed", K::kInt, "", "classifier seed; derived from seed when unset"},
    {"clf.generator", K::kPath, "", "generator checkpoint used to rebalance train-clf data"},

    {"ensemble.m", K::kInt, "10", "checkpoints in the majority vote"},
    {"ensemble.cache_members", K::kInt, "10", "checkpoints cached per fold for the M sweep"},
    {"cv.ablation", K::kString, "full", "naive, egan, ensemble or full"},
    {"sweep.sizes", K::kIntList, "5,6,7,8,9,10", "ensemble sizes of the M sweep"},
    {"sweep.cv_dir", K::kPath, "", "cv output directory whose caches the sweep reads"},

    {"generate.count", K::kInt, "0", "epochs to generate; 0 fills the rebalance target"},
    {"generate.checkpoint", K::kPath, "", "generator checkpoint for generate"},
};

constexpr std::pair<std::string_view, std::string_view> kAliases[] = {
    {"clf.sequence_length", "sequence_length"},
    {"clf.seq_len", "sequence_length"},
};

std::string_view canonical(std::string_view key) {
  for (const auto& [alias, target] : kAliases) {
    if (key == alias) return target;
  }
  return key;
}

std::string_view kind_name(ValueKind k) {
  switch (k) {
    case K::kString: return "string";
    case K::kPath: return "path";
    case K::kInt: return "integer";
    case K::kReal: return "number";
    case K::kBool: return "bool";
    case K::kRealList: return "numbers";
    case K::kIntList: return "integers";
  }
  return "?";
}

std::optional<bool> parse_bool(std::string_view v) {
  std::string s(v);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  return std::nullopt;
}

void check_value(const KeySpec& spec, std::string_view value, const std::string& where) {
  if (value.empty()) return;
  try {
    switch (spec.kind) {
      case K::kString:
      case K::kPath:
        return;
      case K::kInt:
        parse_int(value, spec.key);
        return;
      case K::kReal:
        parse_double(value, spec.key);
        return;
      case K::kBool:
        if (!parse_bool(value)) throw DataError("not a boolean");
        return;
      case K::kRealList:
      case K::kIntList:
        for (auto item : split_view(value, ',')) {
          if (spec.kind == K::kIntList) {
            parse_int(trim(item), spec.key);
          } else {
            parse_double(trim(item), spec.key);
          }
        }
        return;
    }
  } catch (const DataError&) {
    throw ConfigError(where + ": " + std::string(spec.key) + " expects " +
                      std::string(kind_name(spec.kind)) + ", got '" + std::string(value) + "'");
  }
}

Stage parse_stage(std::string_view key, const std::string& text) {
  const auto s = stage_from_name(text);
  if (!s) throw ConfigError(std::string(key) + ": unknown stage '" + text + "'");
  return *s;
}

template <std::size_t N>
std::array<std::size_t, N> fixed_sizes(const ConfigValues& v, std::string_view key) {
  const auto list = v.get_sizes(key);
  if (list.size() != N) {
    throw ConfigError(std::string(key) + " needs " + std::to_string(N) + " values, got " +
                      std::to_string(list.size()));
  }
  std::array<std::size_t, N> out{};
  std::copy(list.begin(), list.end(), out.begin());
  return out;
}

std::size_t epoch_length_of(const EpochStore& store) {
  const std::size_t n = store.epoch_samples();
  if (n == 0) throw DataError("epoch store has zero-length epochs");
  return n;
}

}  // namespace

std::span<const KeySpec> config_keys() { return kKeys; }

const KeySpec* find_key(std::string_view key) {
  key = canonical(key);
  for (const auto& k : kKeys) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

ConfigValues::ConfigValues() {
  for (const auto& k : kKeys) entries_[std::string(k.key)] = {std::string(k.default_value), "default", {}};
}

void ConfigValues::load_file(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> stack;
  load_file_impl(path, stack);
}

void ConfigValues::load_file_impl(const std::filesystem::path& path,
                                  std::vector<std::filesystem::path>& stack) {
  std::error_code ec;
  auto canonical_path = std::filesystem::weakly_canonical(path, ec);
  if (ec) canonical_path = path;
  if (std::find(stack.begin(), stack.end(), canonical_path) != stack.end()) {
    throw ConfigError("config include cycle through " + path.string());
  }
  if (!std::filesystem::exists(path)) {
    throw ConfigError("config file " + path.string() + " does not exist");
  }
  stack.push_back(canonical_path);
  load_text_impl(read_text_file(path), path.parent_path(), path.string(), stack);
  stack.pop_back();
}

void ConfigValues::load_text(std::string_view text, const std::filesystem::path& base_dir,
                             std::string_view source) {
  std::vector<std::filesystem::path> stack;
  load_text_impl(text, base_dir, source, stack);
}

void ConfigValues::load_text_impl(std::string_view text, const std::filesystem::path& base_dir,
                                  std::string_view source,
                                  std::vector<std::filesystem::path>& stack) {
  std::string section;
  std::size_t line_no = 0;
  for (std::string_view raw : split_view(text, '\n')) {
    ++line_no;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    if (line.starts_with("include") &&
        (line.size() == 7 || line[7] == ' ' || line[7] == '\t')) {
      std::string_view target = trim(line.substr(7));
      if (target.size() >= 2 && target.front() == '"' && target.back() == '"') {
        target = target.substr(1, target.size() - 2);
      }
      if (target.empty()) throw ConfigError(where + ": include needs a path");
      std::filesystem::path p(target);
      if (p.is_relative()) p = base_dir / p;
      load_file_impl(p, stack);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    std::string_view value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    set(key, std::string(value), where, base_dir);
  }
}

void ConfigValues::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))),
      "command line", std::filesystem::current_path());
}

void ConfigValues::set(std::string_view key, std::string value, std::string source,
                       std::filesystem::path base_dir) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw ConfigError(source + ": unknown configuration key '" + std::string(key) + "'");
  check_value(*spec, value, source);
  entries_[std::string(spec->key)] = {std::move(value), std::move(source), std::move(base_dir)};
}

const ConfigValues::Entry& ConfigValues::entry(std::string_view key) const {
  const auto it = entries_.find(canonical(key));
  if (it == entries_.end()) throw UsageError("unregistered key " + std::string(key));
  return it->second;
}

void ConfigValues::bad_value(std::string_view key, std::string_view why) const {
  throw ConfigError(entry(key).source + ": " + std::string(key) + " " + std::string(why));
}

bool ConfigValues::has(std::string_view key) const { return !entry(key).value.empty(); }

std::string ConfigValues::get_string(std::string_view key) const { return entry(key).value; }

std::filesystem::path ConfigValues::get_path(std::string_view key) const {
  const auto& e = entry(key);
  if (e.value.empty()) return {};
  std::filesystem::path p(e.value);
  if (p.is_relative() && !e.base_dir.empty()) p = e.base_dir / p;
  return p.lexically_normal();
}

long long ConfigValues::get_int(std::string_view key) const {
  const auto& e = entry(key);
  if (e.value.empty()) bad_value(key, "is not set");
  return parse_int(e.value, key);
}

std::size_t ConfigValues::get_size(std::string_view key) const {
  const long long v = get_int(key);
  if (v < 0) bad_value(key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

double ConfigValues::get_real(std::string_view key) const {
  const auto& e = entry(key);
  if (e.value.empty()) bad_value(key, "is not set");
  const double v = parse_double(e.value, key);
  if (!std::isfinite(v)) bad_value(key, "must be finite");
  return v;
}

bool ConfigValues::get_bool(std::string_view key) const { return *parse_bool(entry(key).value); }

std::vector<double> ConfigValues::get_reals(std::string_view key) const {
  std::vector<double> out;
  for (auto item : split_view(entry(key).value, ',')) out.push_back(parse_double(trim(item), key));
  return out;
}

std::vector<std::size_t> ConfigValues::get_sizes(std::string_view key) const {
  std::vector<std::size_t> out;
  for (auto item : split_view(entry(key).value, ',')) {
    const long long v = parse_int(trim(item), key);
    if (v < 0) bad_value(key, "entries must be non-negative");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string ConfigValues::dump() const {
  std::ostringstream os;
  for (const auto& [key, e] : entries_) {
    const KeySpec* spec = find_key(key);
    os << key << " = " << (spec->kind == K::kPath ? get_path(key).string() : e.value) << "\n";
  }
  return os.str();
}

RunConfig resolve_run_config(const ConfigValues& v) {
  RunConfig c;
  c.seed = static_cast<std::uint64_t>(v.get_int("seed"));
  if (v.has("data.store")) c.data_store = v.get_path("data.store");

  c.ingest.manifest = v.get_path("ingest.manifest");
  c.ingest.channel = v.get_string("ingest.channel");
  c.ingest.epoch_seconds = v.get_real("epoch_seconds");
  if (!(c.ingest.epoch_seconds > 0.0)) throw ConfigError("epoch_seconds must be positive");
  c.ingest.trim_wake = v.get_bool("ingest.trim_wake");
  c.ingest.trim_minutes = v.get_real("ingest.trim_minutes");
  if (c.ingest.trim_minutes < 0.0) throw ConfigError("ingest.trim_minutes must be non-negative");
  if (v.has("ingest.allowlist")) c.ingest.allowlist = v.get_path("ingest.allowlist");
  c.ingest.normalize = v.get_bool("ingest.normalize");

  c.k_folds = v.get_size("k_folds");
  if (c.k_folds < 2) throw ConfigError("k_folds must be at least 2");
  c.val_fraction = v.get_real("val_fraction");
  if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in (0, 1)");
  }
  c.rebalance.policy = data::parse_rebalance_policy(v.get_string("rebalance.policy"));
  c.rebalance.target_count = v.get_size("rebalance.target_count");
  if (c.rebalance.policy == data::RebalancePolicy::kTargetCount && c.rebalance.target_count == 0) {
    throw ConfigError("rebalance.policy = target_count needs rebalance.target_count > 0");
  }
  c.keep_class_weights = v.get_bool("rebalance.keep_class_weights");

  c.gan_noise_dim = v.get_size("gan.noise_dim");
  c.gan_filters = fixed_sizes<4>(v, "gan.filters");
  c.gan_hidden = v.get_size("gan.hidden");
  c.gan_slope = v.get_real("gan.slope");
  auto& g = c.gan;
  g.learning_rate = v.get_real("gan.lr");
  g.d_learning_rate = v.get_real("gan.d_lr");
  g.beta1 = v.get_real("gan.beta1");
  g.beta2 = v.get_real("gan.beta2");
  g.batch_size = v.get_size("gan.batch_size");
  g.train_epochs = v.get_size("gan.epochs");
  g.seed = v.has("gan.seed") ? static_cast<std::uint64_t>(v.get_int("gan.seed"))
                             : derive_seed(c.seed, "gan");
  g.target_stage = parse_stage("gan.target_stage", v.get_string("gan.target_stage"));
  g.d_steps = v.get_size("gan.d_steps");
  g.checkpoint_every = v.get_size("gan.checkpoint_every");
  g.real_label = v.get_real("gan.real_label");
  g.instance_noise = v.get_real("gan.instance_noise");
  g.instance_noise_final = v.get_real("gan.instance_noise_final");
  g.validate();
  c.diagnostics_count = v.get_size("gan.diagnostics_count");

  c.clf_filters = fixed_sizes<3>(v, "clf.filters");
  c.clf_hidden = v.get_size("clf.hidden");
  c.clf_dropout = v.get_real("clf.dropout");
  auto& t = c.clf;
  t.learning_rate = v.get_real("clf.lr");
  t.beta1 = v.get_real("clf.beta1");
  t.beta2 = v.get_real("clf.beta2");
  t.train_epochs = v.get_size("clf.epochs");
  t.batch_size = v.get_size("clf.batch_size");
  t.sequence_length = v.get_size("sequence_length");
  const auto w = v.get_reals("clf.weights");
  if (w.size() != kNumStages) throw ConfigError("clf.weights needs 5 values");
  std::copy(w.begin(), w.end(), t.class_weights.values.begin());
  t.clip_norm = v.get_real("clf.clip_norm");
  t.seed = v.has("clf.seed") ? static_cast<std::uint64_t>(v.get_int("clf.seed"))
                             : derive_seed(c.seed, "classifier");
  t.signal_augment = v.get_bool("augment.signal");
  t.max_shift = v.get_size("augment.max_shift");
  t.sequence_augment = v.get_bool("augment.sequence");
  t.validate();
  if (v.has("clf.generator")) c.clf_generator = v.get_path("clf.generator");

  c.ensemble_m = v.get_size("ensemble.m");
  if (c.ensemble_m == 0) throw ConfigError("ensemble.m must be at least 1");
  c.cache_members = v.get_size("ensemble.cache_members");
  c.ablation = eval::parse_ablation(v.get_string("cv.ablation"));
  c.sweep_sizes = v.get_sizes("sweep.sizes");
  if (c.sweep_sizes.empty()) throw ConfigError("sweep.sizes is empty");
  for (auto m : c.sweep_sizes) {
    if (m == 0) throw ConfigError("sweep.sizes entries must be at least 1");
  }
  if (v.has("sweep.cv_dir")) c.sweep_cv_dir = v.get_path("sweep.cv_dir");

  c.generate_count = v.get_size("generate.count");
  if (v.has("generate.checkpoint")) c.generate_checkpoint = v.get_path("generate.checkpoint");
  return c;
}

gan::GanArchitecture gan_architecture(const RunConfig& config, const EpochStore& store) {
  gan::GanArchitecture a;
  a.noise_dim = config.gan_noise_dim;
  a.epoch_length = epoch_length_of(store);
  a.sampling_rate = store.sampling_rate;
  a.filters = config.gan_filters;
  a.hidden = config.gan_hidden;
  a.slope = config.gan_slope;
  a.validate();
  return a;
}

clf::ClassifierArchitecture classifier_architecture(const RunConfig& config,
                                                    const EpochStore& store) {
  clf::ClassifierArchitecture a;
  a.epoch_length = epoch_length_of(store);
  a.sampling_rate = store.sampling_rate;
  a.filters = config.clf_filters;
  a.hidden = config.clf_hidden;
  a.dropout = config.clf_dropout;
  a.validate();
  return a;
}

eval::CvConfig cv_config(const RunConfig& config, const EpochStore& store, std::size_t jobs) {
  eval::CvConfig c;
  c.clf_arch = classifier_architecture(config, store);
  c.clf = config.clf;
  c.gan_arch = gan_architecture(config, store);
  c.gan = config.gan;
  c.rebalance = config.rebalance;
  c.keep_class_weights = config.keep_class_weights;
  c.folds = config.k_folds;
  c.validation_fraction = config.val_fraction;
  c.ensemble_size = config.ensemble_m;
  c.cache_members = config.cache_members;
  c.ablation = config.ablation;
  c.seed = config.seed;
  c.jobs = jobs;
  c.validate();
  return c;
}

std::string format_key_reference() {
  std::ostringstream os;
  os << "| key | type | default | meaning |\n|---|---|---|---|\n";
  for (const auto& k : kKeys) {
    os << "| `" << k.key << "` | " << kind_name(k.kind) << " | "
       << (k.default_value.empty() ? "(unset)" : "`" + std::string(k.default_value) + "`")
       << " | " << k.help << " |\n";
  }
  return os.str();
}

}  // namespace somnus::cli
