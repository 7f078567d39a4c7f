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

#include "somnus/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "somnus/ad/checkpoint.hpp"
#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/core/text.hpp"
#include "somnus/data/synthetic.hpp"
#include "somnus/edf/edf.hpp"
#include "somnus/eval/report.hpp"
#include "somnus/gan/diagnostics.hpp"

namespace somnus::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kVersion = "0.1.0";

void say(const CommandContext& ctx, const std::string& line) {
  if (ctx.console) *ctx.console << line << '\n' << std::flush;
}

EpochStore load_store(const RunConfig& config) {
  if (!config.data_store) throw ConfigError("data.store is not set");
  return load_epoch_store(*config.data_store);
}

std::vector<LabeledEpoch> real_only(std::span<const LabeledEpoch> epochs) {
  std::vector<LabeledEpoch> out;
  for (const auto& e : epochs) {
    if (e.source == EpochSource::kReal) out.push_back(e);
  }
  return out;
}

std::string counts_table(const data::StageCounts& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  std::ostringstream os;
  os << "stage\tepochs\tpercent\n";
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const double pct = total ? 100.0 * static_cast<double>(counts[s]) / total : 0.0;
    os << stage_name(stage_from_index(static_cast<int>(s))) << '\t' << counts[s] << '\t'
       << format_fixed(pct, 2) << '\n';
  }
  os << "total\t" << total << "\t" << (total ? "100.00" : "0.00") << '\n';
  return os.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t file_digest(const fs::path& path) {
  const auto bytes = read_file(path);
  return fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// Stage-only epochs laid out from hypnogram intervals, for files without a
// matching signal.
std::vector<LabeledEpoch> epochs_from_intervals(const edf::Hypnogram& hyp,
                                                double epoch_seconds) {
  std::vector<LabeledEpoch> out;
  std::int64_t index = 0;
  for (const auto& iv : hyp.intervals) {
    const auto n = static_cast<std::int64_t>(std::floor(iv.duration / epoch_seconds + 1e-9));
    const auto stage = edf::map_stage(iv.token);
    for (std::int64_t k = 0; k < n; ++k, ++index) {
      if (!stage) continue;
      LabeledEpoch e;
      e.stage = *stage;
      e.index = index;
      e.recording_id = "hypnogram";
      out.push_back(std::move(e));
    }
  }
  return out;
}

bool has_annotations(const edf::EdfHeader& header) {
  return std::any_of(header.signals.begin(), header.signals.end(), [](const auto& s) {
    return edf::normalize_label(s.label) == edf::normalize_label("EDF Annotations");
  });
}

std::vector<std::string> read_allowlist(const fs::path& path) {
  std::vector<std::string> ids;
  const std::string text = read_text_file(path);
  for (auto line : split_view(text, '\n')) {
    line = trim(line.substr(0, line.find('#')));
    if (!line.empty()) ids.emplace_back(line);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

struct ManifestRow {
  fs::path psg;
  fs::path hypnogram;
  std::string subject;  // empty: taken from the EDF patient field
};

std::vector<ManifestRow> read_ingest_manifest(const fs::path& path) {
  std::vector<ManifestRow> rows;
  std::size_t line_no = 0;
  const std::string text = read_text_file(path);
  for (auto line : split_view(text, '\n')) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    for (auto f : split_view(line, '\t')) fields.push_back(trim(f));
    if (fields[0] == "psg") continue;
    if (fields.size() < 2 || fields.size() > 3) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected psg<TAB>hypnogram[<TAB>subject]");
    }
    ManifestRow row;
    row.psg = fs::path(fields[0]);
    row.hypnogram = fs::path(fields[1]);
    if (row.psg.is_relative()) row.psg = path.parent_path() / row.psg;
    if (row.hypnogram.is_relative()) row.hypnogram = path.parent_path() / row.hypnogram;
    if (fields.size() == 3) row.subject = std::string(fields[2]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + " lists no recordings");
  return rows;
}

// Subjects split into training and validation for a single classifier run.
std::pair<std::vector<std::string>, std::vector<std::string>> split_subjects(
    std::vector<std::string> subjects, double val_fraction, std::uint64_t seed) {
  if (subjects.size() < 2) {
    throw DataError("training a classifier needs at least two subjects, found " +
                    std::to_string(subjects.size()));
  }
  Rng rng = make_rng(seed, "train-clf-split");
  std::shuffle(subjects.begin(), subjects.end(), rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(val_fraction * subjects.size())), 1,
      subjects.size() - 1);
  std::vector<std::string> val(subjects.begin(), subjects.begin() + n_val);
  std::vector<std::string> train(subjects.begin() + n_val, subjects.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {train, val};
}

std::string records_table(std::span<const clf::EpochRecord> records) {
  std::ostringstream os;
  os << "rank\tepoch\tval_acc\tval_mf1\ttrain_loss\ttrain_acc\tfile\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << i + 1 << '\t' << r.epoch << '\t' << format_double(r.val_acc) << '\t'
       << format_double(r.val_mf1) << '\t' << format_double(r.train_loss) << '\t'
       << format_double(r.train_acc) << '\t' << r.file << '\n';
  }
  return os.str();
}

std::string fold_name(std::size_t fold) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "fold-%02zu", fold);
  return buf;
}

}  // namespace

fs::path timestamped_run_dir(const fs::path& root, std::string_view command) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  return root / "runs" / (std::string(command) + "-" + stamp);
}

void inspect_edf(const fs::path& path, const std::optional<fs::path>& hypnogram,
                 const IngestSettings& settings, std::ostream& os) {
  const auto bytes = read_file(path);
  const edf::EdfFile file = edf::parse_edf_file(bytes);
  const auto& h = file.header;
  os << "file\t" << path.string() << '\n'
     << "version\t" << h.version << '\n'
     << "patient\t" << h.patient << '\n'
     << "recording\t" << h.recording << '\n'
     << "start\t" << h.start_date << ' ' << h.start_time << '\n'
     << "reserved\t" << h.reserved << '\n'
     << "records\t" << h.num_records << '\n'
     << "record_duration_s\t" << format_double(h.record_duration) << '\n'
     << "duration_s\t" << format_double(h.record_duration * h.num_records) << '\n'
     << "signals\t" << h.signals.size() << '\n';
  os << "\nsignal\tlabel\tsample_rate_hz\tphysical_min\tphysical_max\tunit\tdigital_min\t"
        "digital_max\n";
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    const auto& s = h.signals[i];
    os << i << '\t' << s.label << '\t'
       << format_double(s.samples_per_record / h.record_duration) << '\t'
       << format_double(s.physical_min) << '\t' << format_double(s.physical_max) << '\t'
       << s.physical_dimension << '\t' << s.digital_min << '\t' << s.digital_max << '\n';
  }

  std::optional<edf::Hypnogram> hyp;
  if (hypnogram) {
    hyp = edf::parse_hypnogram(read_file(*hypnogram));
  } else if (has_annotations(h)) {
    hyp = edf::parse_hypnogram(bytes);
  }
  if (!hyp) return;

  std::vector<LabeledEpoch> epochs;
  const bool has_channel =
      std::any_of(h.signals.begin(), h.signals.end(), [&](const auto& s) {
        return edf::normalize_label(s.label) == edf::normalize_label(settings.channel);
      });
  if (hypnogram && has_channel) {
    epochs = edf::segment_epochs(edf::parse_edf(bytes, settings.channel), *hyp,
                                 {settings.epoch_seconds});
  } else {
    epochs = epochs_from_intervals(*hyp, settings.epoch_seconds);
  }
  if (settings.trim_wake) {
    epochs = edf::trim_wake(std::move(epochs), settings.trim_minutes, settings.epoch_seconds);
  }
  os << '\n' << counts_table(count_stages(epochs));
}

void cmd_synth(const CommandContext& ctx, const SyntheticOptions& options) {
  const RunConfig config = resolve_run_config(ctx.values);
  data::SpectralCorpusConfig corpus;
  corpus.subjects = options.subjects;
  corpus.epochs_per_subject = options.epochs_per_subject;
  corpus.sampling_rate = options.sampling_rate;
  corpus.epoch_seconds = options.epoch_seconds;
  EpochStore store;
  store.sampling_rate = options.sampling_rate;
  store.epoch_seconds = options.epoch_seconds;
  store.channel = "synthetic";
  store.epochs = data::normalize(data::make_spectral_corpus(corpus, derive_seed(config.seed, "synth")));
  save_epoch_store(ctx.out_dir / "epochs.segd", store);
  write_text_file(ctx.out_dir / "distribution.tsv", counts_table(count_stages(store.epochs)));
  say(ctx, "wrote " + std::to_string(store.epochs.size()) + " epochs to " +
               (ctx.out_dir / "epochs.segd").string());
}

void cmd_ingest(const CommandContext& ctx) {
  const RunConfig config = resolve_run_config(ctx.values);
  const auto& in = config.ingest;
  if (in.manifest.empty()) throw ConfigError("ingest.manifest is not set");
  const auto rows = read_ingest_manifest(in.manifest);
  std::optional<std::vector<std::string>> allow;
  if (in.allowlist) allow = read_allowlist(*in.allowlist);

  EpochStore store;
  store.epoch_seconds = in.epoch_seconds;
  store.channel = in.channel;
  std::ostringstream table;
  table << "recording\tsubject\tsample_rate_hz\tepochs\tW\tN1\tN2\tN3\tREM\n";
  for (const auto& row : rows) {
    std::vector<LabeledEpoch> epochs;
    edf::Recording rec;
    try {
      rec = edf::parse_edf(read_file(row.psg), in.channel);
      if (!row.subject.empty()) rec.meta.subject_id = row.subject;
      if (allow && !std::binary_search(allow->begin(), allow->end(), rec.meta.subject_id)) {
        say(ctx, "skip " + row.psg.string() + " (subject " + rec.meta.subject_id +
                     " not in allowlist)");
        continue;
      }
      const auto hyp = edf::parse_hypnogram(read_file(row.hypnogram));
      epochs = edf::segment_epochs(rec, hyp, {in.epoch_seconds});
    } catch (const DataError& e) {
      throw DataError(row.psg.filename().string() + ": " + e.what());
    }
    if (in.trim_wake) epochs = edf::trim_wake(std::move(epochs), in.trim_minutes, in.epoch_seconds);
    if (in.normalize) epochs = data::normalize_recording(std::move(epochs));
    if (store.sampling_rate == 0.0) {
      store.sampling_rate = rec.meta.sampling_rate;
    } else if (rec.meta.sampling_rate != store.sampling_rate) {
      throw DataError(row.psg.string() + " samples " + format_double(rec.meta.sampling_rate) +
                      " Hz, earlier recordings " + format_double(store.sampling_rate) + " Hz");
    }
    const auto counts = count_stages(epochs);
    table << row.psg.filename().string() << '\t' << rec.meta.subject_id << '\t'
          << format_double(rec.meta.sampling_rate) << '\t' << epochs.size();
    for (auto c : counts) table << '\t' << c;
    table << '\n';
    say(ctx, row.psg.filename().string() + ": " + std::to_string(epochs.size()) + " epochs");
    store.epochs.insert(store.epochs.end(), std::make_move_iterator(epochs.begin()),
                        std::make_move_iterator(epochs.end()));
  }
  if (store.epochs.empty()) throw DataError("ingest produced no epochs");
  save_epoch_store(ctx.out_dir / "epochs.segd", store);
  write_text_file(ctx.out_dir / "recordings.tsv", table.str());
  write_text_file(ctx.out_dir / "distribution.tsv", counts_table(count_stages(store.epochs)));
  say(ctx, "wrote " + std::to_string(store.epochs.size()) + " epochs to " +
               (ctx.out_dir / "epochs.segd").string());
}

void cmd_train_gan(const CommandContext& ctx) {
  const RunConfig config = resolve_run_config(ctx.values);
  const EpochStore store = load_store(config);
  const gan::GanArchitecture arch = gan_architecture(config, store);
  const Stage stage = config.gan.target_stage;

  std::vector<LabeledEpoch> real;
  for (const auto& e : store.epochs) {
    if (e.source == EpochSource::kReal && e.stage == stage) real.push_back(e);
  }
  say(ctx, "training on " + std::to_string(real.size()) + " real " +
               std::string(stage_name(stage)) + " epochs");

  gan::GanTrainer trainer(arch, config.gan);
  trainer.set_real(real);
  const fs::path state_dir = ctx.out_dir / "gan";
  const fs::path resume_file = state_dir / "gan-resume.segk";
  if (ctx.resume && fs::exists(resume_file)) {
    trainer.restore(ad::load_checkpoint(resume_file));
    say(ctx, "resumed after epoch " + std::to_string(trainer.log().back().epoch));
  }
  trainer.train(state_dir, ctx.stop_after_epoch, [&](const gan::GanEpochLog& l) {
    say(ctx, "epoch " + std::to_string(l.epoch) + "  d_loss " + format_fixed(l.d_loss, 4) +
                 "  g_loss " + format_fixed(l.g_loss, 4) + "  d_acc " + format_fixed(l.d_acc, 3));
  });

  std::ostringstream log;
  log << "epoch\td_loss\tg_loss\td_acc\n";
  for (const auto& l : trainer.log()) {
    log << l.epoch << '\t' << format_double(l.d_loss) << '\t' << format_double(l.g_loss) << '\t'
        << format_double(l.d_acc) << '\n';
  }
  write_text_file(ctx.out_dir / "gan_log.tsv", log.str());

  const auto done = trainer.log().empty() ? -1 : trainer.log().back().epoch;
  if (done + 1 < static_cast<std::int64_t>(config.gan.train_epochs)) {
    say(ctx, "stopped after epoch " + std::to_string(done) + "; rerun with --resume");
    return;
  }
  ad::save_checkpoint(ctx.out_dir / "generator.segk",
                      gan::generator_checkpoint(trainer.generator(), stage, done,
                                                config.gan.seed));

  const std::size_t n = std::min(config.diagnostics_count, real.size());
  const auto fake = gan::sample_minority(trainer.generator(), n, stage,
                                         derive_seed(config.gan.seed, "diagnostics"));
  const std::span<const LabeledEpoch> real_view(real.data(), n);
  const auto diag = gan::compute_diagnostics(real_view, fake, store.sampling_rate);
  write_text_file(ctx.out_dir / "diagnostics.tsv", gan::format_diagnostics(diag));
  write_text_file(ctx.out_dir / "traces.tsv", gan::format_traces(diag));
  const double d_acc = gan::discriminator_accuracy(trainer.discriminator(), real_view, fake);
  std::ostringstream summary;
  summary << "key\tvalue\n"
          << "epochs\t" << done + 1 << '\n'
          << "real_dominant_hz\t" << format_double(diag.real.dominant_mean_hz) << '\n'
          << "generated_dominant_hz\t" << format_double(diag.generated.dominant_mean_hz) << '\n'
          << "js_divergence_bits\t" << format_double(diag.js_divergence) << '\n'
          << "discriminator_accuracy\t" << format_double(d_acc) << '\n';
  write_text_file(ctx.out_dir / "summary.tsv", summary.str());
  say(ctx, "dominant frequency real " + format_fixed(diag.real.dominant_mean_hz, 2) +
               " Hz, generated " + format_fixed(diag.generated.dominant_mean_hz, 2) +
               " Hz; discriminator accuracy " + format_fixed(d_acc, 3));
}

void cmd_generate(const CommandContext& ctx) {
  const RunConfig config = resolve_run_config(ctx.values);
  if (!config.generate_checkpoint) throw ConfigError("generate.checkpoint is not set");
  const auto loaded = gan::load_generator(ad::load_checkpoint(*config.generate_checkpoint));
  const auto& arch = loaded.generator.architecture();

  std::optional<EpochStore> store;
  if (config.data_store) store = load_epoch_store(*config.data_store);
  std::size_t count = config.generate_count;
  if (count == 0) {
    if (!store) throw ConfigError("generate.count = 0 needs data.store to plan the target");
    const auto plan = data::plan_rebalance(count_stages(real_only(store->epochs)),
                                           config.rebalance);
    if (plan.minority != loaded.stage) {
      throw ConfigError("generator produces " + std::string(stage_name(loaded.stage)) +
                        " but the store's minority class is " +
                        std::string(stage_name(plan.minority)));
    }
    count = plan.to_generate;
  }
  if (store && (store->epoch_samples() != arch.epoch_length ||
                store->sampling_rate != arch.sampling_rate)) {
    throw DataError("generator epochs do not match the epoch store's shape");
  }

  EpochStore out;
  out.sampling_rate = arch.sampling_rate;
  out.epoch_seconds = static_cast<double>(arch.epoch_length) / arch.sampling_rate;
  out.channel = store ? store->channel : "generated";
  out.epochs = gan::sample_minority(loaded.generator, count, loaded.stage,
                                    derive_seed(config.seed, "generate"));
  save_epoch_store(ctx.out_dir / "generated.segd", out);
  say(ctx, "generated " + std::to_string(count) + " " + std::string(stage_name(loaded.stage)) +
               " epochs");
  if (store) {
    std::ostringstream counts;
    counts << "stage\tbefore\tafter\n";
    const auto before = count_stages(store->epochs);
    store->epochs.insert(store->epochs.end(), out.epochs.begin(), out.epochs.end());
    const auto after = count_stages(store->epochs);
    for (std::size_t s = 0; s < kNumStages; ++s) {
      counts << stage_name(stage_from_index(static_cast<int>(s))) << '\t' << before[s] << '\t'
             << after[s] << '\n';
    }
    save_epoch_store(ctx.out_dir / "rebalanced.segd", *store);
    write_text_file(ctx.out_dir / "counts.tsv", counts.str());
  }
}

void cmd_train_clf(const CommandContext& ctx) {
  const RunConfig config = resolve_run_config(ctx.values);
  const EpochStore store = load_store(config);
  const auto arch = classifier_architecture(config, store);
  auto [train_ids, val_ids] =
      split_subjects(data::subjects_of(store.epochs), config.val_fraction, config.seed);

  std::vector<LabeledEpoch> train = data::select_subjects(store.epochs, train_ids);
  for (const auto& e : store.epochs) {
    if (e.source == EpochSource::kGenerated) train.push_back(e);
  }
  std::vector<LabeledEpoch> validation = data::select_subjects(store.epochs, val_ids);

  if (config.clf_generator) {
    const auto loaded = gan::load_generator(ad::load_checkpoint(*config.clf_generator));
    const std::uint64_t sample_seed = derive_seed(config.seed, "train-clf-sample");
    data::EpochSampler sampler = [&](Stage stage, std::size_t n) {
      if (stage != loaded.stage) {
        throw ConfigError("clf.generator produces " + std::string(stage_name(loaded.stage)) +
                          " but the minority class is " + std::string(stage_name(stage)));
      }
      return gan::sample_minority(loaded.generator, n, stage, sample_seed);
    };
    train = data::rebalance(std::move(train), sampler, config.rebalance);
  }
  const auto generated = static_cast<std::size_t>(
      std::count_if(train.begin(), train.end(),
                    [](const auto& e) { return e.source == EpochSource::kGenerated; }));
  clf::ClfTrainConfig tcfg = config.clf;
  if (generated > 0 && !config.keep_class_weights) tcfg.class_weights.values.fill(1.0);

  std::ostringstream split;
  split << "role\tsubject\n";
  for (const auto& s : train_ids) split << "train\t" << s << '\n';
  for (const auto& s : val_ids) split << "validation\t" << s << '\n';
  write_text_file(ctx.out_dir / "split.tsv", split.str());
  say(ctx, std::to_string(train.size()) + " training epochs (" + std::to_string(generated) +
               " generated), " + std::to_string(validation.size()) + " validation epochs");

  clf::ClassifierTrainer trainer(arch, tcfg);
  trainer.set_data(std::move(train), std::move(validation));
  const fs::path bank_dir = ctx.out_dir / "bank";
  clf::CheckpointBank bank = ctx.resume && fs::exists(bank_dir / "bank.tsv")
                                 ? clf::CheckpointBank::open(bank_dir)
                                 : clf::CheckpointBank(bank_dir);
  trainer.train(bank, ctx.resume, ctx.stop_after_epoch, [&](const clf::EpochRecord& r) {
    say(ctx, "epoch " + std::to_string(r.epoch) + "  loss " + format_fixed(r.train_loss, 4) +
                 "  train_acc " + format_fixed(r.train_acc, 4) + "  val_acc " +
                 format_fixed(r.val_acc, 4) + "  val_mf1 " + format_fixed(r.val_mf1, 4));
  });
  const auto m = std::min(config.ensemble_m, bank.size());
  if (m == 0) return;
  const auto top = eval::select_top_m(bank.records(), m);
  write_text_file(ctx.out_dir / "top_m.tsv", records_table(top));
  ad::save_checkpoint(ctx.out_dir / "best.segk", bank.load(top.front().epoch));
}

void cmd_cv(const CommandContext& ctx) {
  if (ctx.stop_after_epoch) {
    throw ConfigError("cv does not take --stop-after-epoch; interrupt it and rerun with --resume");
  }
  const RunConfig config = resolve_run_config(ctx.values);
  const EpochStore store = load_store(config);
  const auto cfg = cv_config(config, store, ctx.jobs);
  const auto subjects = data::subjects_of(store.epochs);
  const auto plan = data::make_folds(subjects, config.k_folds, config.val_fraction, config.seed);

  std::ostringstream folds;
  folds << "fold\trole\tsubject\n";
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const auto& fold = plan.folds[f];
    for (const auto& s : fold.train) folds << f << "\ttrain\t" << s << '\n';
    for (const auto& s : fold.validation) folds << f << "\tvalidation\t" << s << '\n';
    for (const auto& s : fold.test) folds << f << "\ttest\t" << s << '\n';
  }
  write_text_file(ctx.out_dir / "folds.tsv", folds.str());
  say(ctx, "cross-validating " + std::to_string(subjects.size()) + " subjects in " +
               std::to_string(plan.k) + " folds, ablation " +
               std::string(eval::ablation_name(cfg.ablation)));

  const auto result = eval::run_cv(store.epochs, plan, cfg, ctx.out_dir, ctx.resume);

  std::vector<eval::NamedReport> rows;
  ordered_json per_fold = ordered_json::array();
  for (const auto& f : result.folds) {
    rows.push_back({fold_name(f.fold), f.report});
    ordered_json j = eval::to_json(f.report);
    j["fold"] = f.fold;
    j["train_epochs"] = f.train_epochs;
    j["generated_epochs"] = f.generated_epochs;
    per_fold.push_back(std::move(j));
  }
  rows.push_back({"pooled", result.pooled});
  write_text_file(ctx.out_dir / "report.tsv", eval::format_metrics_table(rows));
  write_text_file(ctx.out_dir / "confusion.tsv", eval::format_confusion(result.pooled.confusion));
  ordered_json report;
  report["ablation"] = std::string(eval::ablation_name(cfg.ablation));
  report["seed"] = config.seed;
  report["folds"] = plan.k;
  report["ensemble_m"] = cfg.ensemble_size;
  report["pooled"] = eval::to_json(result.pooled);
  report["per_fold"] = std::move(per_fold);
  write_text_file(ctx.out_dir / "report.json", report.dump(2) + "\n");
  say(ctx, "pooled acc " + format_fixed(100.0 * result.pooled.acc, 2) + "%  mf1 " +
               format_fixed(100.0 * result.pooled.mf1, 2) + "%  kappa " +
               format_fixed(result.pooled.kappa, 4));
}

void cmd_sweep_m(const CommandContext& ctx) {
  const RunConfig config = resolve_run_config(ctx.values);
  if (!config.sweep_cv_dir) throw ConfigError("sweep.cv_dir is not set");
  const fs::path& dir = *config.sweep_cv_dir;
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto cache = entry.path() / "predictions.segp";
    if (entry.is_directory() && entry.path().filename().string().starts_with("fold-") &&
        fs::exists(cache)) {
      files.push_back(cache);
    }
  }
  if (files.empty()) throw DataError(dir.string() + " holds no fold prediction caches");
  std::sort(files.begin(), files.end());
  std::vector<eval::PredictionCache> caches;
  for (const auto& f : files) caches.push_back(eval::load_prediction_cache(f));

  const auto rows = eval::sensitivity_sweep(caches, config.sweep_sizes);
  write_text_file(ctx.out_dir / "sweep.tsv", eval::format_sweep_table(rows));
  std::ostringstream dat;
  dat << "# m acc mf1 kappa\n";
  for (const auto& r : rows) {
    dat << r.m << ' ' << format_double(r.report.acc) << ' ' << format_double(r.report.mf1) << ' '
        << format_double(r.report.kappa) << '\n';
  }
  write_text_file(ctx.out_dir / "sweep.dat", dat.str());

  const auto [lo, hi] = std::minmax_element(config.sweep_sizes.begin(), config.sweep_sizes.end());
  const auto sim = eval::simulate_votes(caches, *lo, *hi);
  const double spread = eval::sweep_spread(rows);
  std::ostringstream os;
  os << "key\tvalue\n"
     << "caches\t" << caches.size() << '\n'
     << "subsets\t" << sim.subsets << '\n'
     << "simulated_min_acc\t" << format_double(sim.min_acc) << '\n'
     << "simulated_max_acc\t" << format_double(sim.max_acc) << '\n'
     << "simulated_spread\t" << format_double(sim.spread()) << '\n'
     << "sweep_spread\t" << format_double(spread) << '\n'
     << "within_simulation\t" << (spread <= sim.spread() ? "yes" : "no") << '\n';
  write_text_file(ctx.out_dir / "simulation.tsv", os.str());
  say(ctx, "sweep spread " + format_fixed(100.0 * spread, 2) + " points; vote simulation " +
               format_fixed(100.0 * sim.spread(), 2) + " points over " +
               std::to_string(sim.subsets) + " subsets");
}

void write_manifest(const CommandContext& ctx) {
  std::vector<fs::path> files;
  if (fs::exists(ctx.out_dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(ctx.out_dir)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), ctx.out_dir);
      if (rel == "manifest.json") continue;
      files.push_back(rel);
    }
  }
  std::sort(files.begin(), files.end());
  ordered_json outputs = ordered_json::array();
  for (const auto& rel : files) {
    const auto full = ctx.out_dir / rel;
    outputs.push_back({{"path", rel.generic_string()},
                       {"bytes", fs::file_size(full)},
                       {"fnv1a64", hex64(file_digest(full))}});
  }
  ordered_json config = ordered_json::object();
  const std::string dumped = ctx.values.dump();
  for (auto line : split_view(dumped, '\n')) {
    const auto eq = line.find(" = ");
    if (eq == std::string_view::npos) continue;
    config[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 3));
  }
  ordered_json m;
  m["tool"] = "somnus";
  m["version"] = std::string(kVersion);
  m["command"] = ctx.command;
  m["config"] = std::move(config);
  m["outputs"] = std::move(outputs);
  write_text_file(ctx.out_dir / "manifest.json", m.dump(2) + "\n");
}

int exit_code_for_exception(const std::exception& error) {
  if (const auto* e = dynamic_cast<const Error*>(&error)) {
    if (e->category() == ErrorCategory::kUsage) return 2;
    return exit_code_for(e->category());
  }
  return 4;
}

}  // namespace somnus::cli
