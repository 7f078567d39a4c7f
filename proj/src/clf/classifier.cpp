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

#include "somnus/clf/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/log.hpp"
#include "somnus/core/text.hpp"
#include "somnus/eval/metrics.hpp"

namespace somnus::clf {

using ad::Tensor;

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

Tensor pool_same(const Tensor& x, std::size_t window) {
  return ad::maxpool1d(x, window, window, ad::same_pool_pad(x.dim(2), window));
}

constexpr const char* kIndexName = "bank.tsv";
constexpr const char* kResumeName = "resume.segk";

}  // namespace

std::size_t ClassifierArchitecture::first_kernel() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(sampling_rate / 2.0)));
}

std::size_t ClassifierArchitecture::first_stride() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(sampling_rate / 4.0)));
}

std::size_t ClassifierArchitecture::feature_length() const {
  const std::size_t l1 = (epoch_length - first_kernel()) / first_stride() + 1;
  const std::size_t l2 = ceil_div(l1, 8);
  const std::size_t l3 = ceil_div(l2, 4);
  const std::size_t l4 = ceil_div(l3, 2);
  return filters[2] * l4;
}

void ClassifierArchitecture::validate() const {
  if (epoch_length == 0 || hidden == 0) {
    throw ConfigError("classifier epoch length and hidden size must be positive");
  }
  if (!(sampling_rate > 0.0)) throw ConfigError("classifier sampling rate must be positive");
  for (std::size_t f : filters) {
    if (f == 0) throw ConfigError("classifier filter counts must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("clf.dropout must lie in [0, 1)");
  if (first_kernel() > epoch_length) {
    throw ConfigError("first classifier kernel (" + std::to_string(first_kernel()) +
                      ") exceeds the epoch length (" + std::to_string(epoch_length) + ")");
  }
}

ClassifierArchitecture sleep_edf_classifier() { return {}; }

ClassifierArchitecture shhs_classifier() {
  ClassifierArchitecture a;
  a.epoch_length = 3750;
  a.sampling_rate = 125.0;
  return a;
}

Classifier::Classifier(const ClassifierArchitecture& arch, std::uint64_t seed)
    : arch_(arch) {
  arch_.validate();
  Rng rng = make_rng(seed, "classifier-init");
  const auto& f = arch_.filters;
  convs_[0] = ad::make_conv(params_, "conv0", 1, f[0], arch_.first_kernel(),
                            arch_.first_stride(), false, rng);
  convs_[1] = ad::make_conv(params_, "conv1", f[0], f[1], 8, 1, true, rng);
  convs_[2] = ad::make_conv(params_, "conv2", f[1], f[1], 8, 1, true, rng);
  convs_[3] = ad::make_conv(params_, "conv3", f[1], f[2], 8, 1, true, rng);
  convs_[4] = ad::make_conv(params_, "conv4", f[2], f[2], 8, 1, true, rng);
  lstm_ = ad::make_lstm(params_, "lstm", arch_.feature_length(), arch_.hidden, rng);
  head_ = ad::make_linear(params_, "head", arch_.hidden, kNumStages, rng);
}

Tensor Classifier::features(const Tensor& x, bool training, Rng* rng) const {
  if (x.rank() != 2 || x.dim(1) != arch_.epoch_length) {
    throw ShapeError("classifier expects epochs of " + std::to_string(arch_.epoch_length) +
                     " samples, got " + ad::shape_str(x.shape()));
  }
  if (training && !rng && arch_.dropout > 0.0) {
    throw UsageError("training-mode classification needs a random stream for dropout");
  }
  Rng unused(0);
  Rng& r = rng ? *rng : unused;
  const std::size_t n = x.dim(0);
  Tensor h = ad::reshape(x, {n, 1, arch_.epoch_length});
  h = pool_same(ad::relu(convs_[0](h)), 8);
  h = ad::dropout(h, arch_.dropout, training, r);
  h = ad::relu(convs_[1](h));
  h = pool_same(ad::relu(convs_[2](h)), 4);
  h = ad::dropout(h, arch_.dropout, training, r);
  h = ad::relu(convs_[3](h));
  h = pool_same(ad::relu(convs_[4](h)), 2);
  return ad::reshape(h, {n, h.dim(1) * h.dim(2)});
}

SequenceOutput Classifier::forward(const Tensor& epochs, bool training, Rng* rng,
                                   const ad::LstmState* initial) const {
  if (epochs.rank() != 3 || epochs.dim(2) != arch_.epoch_length) {
    throw ShapeError("classifier expects [B, L, " + std::to_string(arch_.epoch_length) +
                     "], got " + ad::shape_str(epochs.shape()));
  }
  const std::size_t b = epochs.dim(0), l = epochs.dim(1);
  Tensor feats = features(ad::reshape(epochs, {b * l, arch_.epoch_length}), training, rng);
  feats = ad::reshape(feats, {b, l, arch_.feature_length()});
  ad::LstmState state = initial ? *initial : ad::zero_state(b, arch_.hidden);
  if (state.h.shape() != ad::Shape{b, arch_.hidden} ||
      state.c.shape() != ad::Shape{b, arch_.hidden}) {
    throw ShapeError("initial LSTM state does not match the batch");
  }
  std::vector<Tensor> steps;
  steps.reserve(l);
  state = ad::run_lstm(lstm_, feats, state, &steps);
  Rng unused(0);
  Tensor hs = ad::dropout(ad::stack_steps(steps), arch_.dropout, training,
                          rng ? *rng : unused);
  Tensor logits = head_(ad::reshape(hs, {b * l, arch_.hidden}));
  return {ad::reshape(logits, {b, l, kNumStages}), state};
}

Tensor Classifier::classify_sequence(const Tensor& epochs, bool training, Rng* rng) const {
  return ad::softmax(forward(epochs, training, rng).logits, -1);
}

int argmax5(std::span<const double> row) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(row.size()); ++k) {
    if (row[static_cast<std::size_t>(k)] > row[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

std::vector<int> predict(const Tensor& distribution) {
  if (distribution.rank() == 0 || distribution.shape().back() != kNumStages) {
    throw ShapeError("predict expects a trailing axis of 5 classes");
  }
  const std::size_t rows = distribution.numel() / kNumStages;
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = argmax5(std::span(distribution.data()).subspan(r * kNumStages, kNumStages));
  }
  return out;
}

std::vector<ClassProbabilities> infer_probabilities(const Classifier& classifier,
                                                    std::span<const LabeledEpoch> epochs,
                                                    std::size_t sequence_length,
                                                    std::size_t batch) {
  ad::NoGradGuard guard;
  const std::size_t e = classifier.architecture().epoch_length;
  const auto streams = data::build_streams(epochs);
  const auto sequences = data::evaluation_sequences(streams, sequence_length);
  std::map<std::size_t, std::vector<const std::vector<std::size_t>*>> by_length;
  for (const auto& s : sequences) by_length[s.size()].push_back(&s);

  std::vector<ClassProbabilities> out(epochs.size(), ClassProbabilities{});
  for (const auto& [len, group] : by_length) {
    for (std::size_t start = 0; start < group.size(); start += batch) {
      const std::size_t b = std::min(batch, group.size() - start);
      std::vector<double> buf;
      buf.reserve(b * len * e);
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t idx : *group[start + i]) {
          const auto& s = epochs[idx].samples;
          if (s.size() != e) {
            throw DataError("epoch has " + std::to_string(s.size()) +
                            " samples, classifier expects " + std::to_string(e));
          }
          buf.insert(buf.end(), s.begin(), s.end());
        }
      }
      Tensor probs = classifier.classify_sequence(Tensor({b, len, e}, std::move(buf)), false);
      for (std::size_t i = 0; i < b; ++i) {
        const auto& members = *group[start + i];
        for (std::size_t t = 0; t < len; ++t) {
          auto& dst = out[members[t]];
          const double* src = probs.data().data() + (i * len + t) * kNumStages;
          std::copy(src, src + kNumStages, dst.begin());
        }
      }
    }
  }
  return out;
}

void ClfTrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("clf.batch_size must be positive");
  if (sequence_length == 0) throw ConfigError("clf.sequence_length must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clf.clip_norm must be positive");
  class_weights.validate();
  ad::AdamState probe;
  probe.learning_rate = learning_rate;
  probe.beta1 = beta1;
  probe.beta2 = beta2;
  probe.validate();
}

// ---------------------------------------------------------------------------
// Checkpoint bank.

CheckpointBank::CheckpointBank(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

CheckpointBank CheckpointBank::open(const std::filesystem::path& directory) {
  CheckpointBank bank;
  bank.directory_ = directory;
  const auto index = directory / kIndexName;
  if (std::filesystem::exists(index)) {
    bank.records_ = parse_index(read_text_file(index));
  }
  return bank;
}

void CheckpointBank::add(EpochRecord record, ad::Checkpoint checkpoint) {
  if (!records_.empty() && record.epoch <= records_.back().epoch) {
    throw UsageError("checkpoint bank epochs must increase; got " +
                     std::to_string(record.epoch) + " after " +
                     std::to_string(records_.back().epoch));
  }
  if (directory_) {
    char name[48];
    std::snprintf(name, sizeof(name), "clf-epoch-%04lld.segk",
                  static_cast<long long>(record.epoch));
    record.file = name;
    ad::save_checkpoint(*directory_ / record.file, checkpoint);
    records_.push_back(std::move(record));
    write_index();
  } else {
    records_.push_back(std::move(record));
    memory_.push_back(std::move(checkpoint));
  }
}

ad::Checkpoint CheckpointBank::load(std::int64_t epoch) const {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].epoch != epoch) continue;
    if (directory_) return ad::load_checkpoint(*directory_ / records_[i].file);
    return memory_.at(i);
  }
  throw DataError("checkpoint bank has no epoch " + std::to_string(epoch));
}

void CheckpointBank::truncate_after(std::int64_t epoch) {
  std::size_t keep = 0;
  while (keep < records_.size() && records_[keep].epoch <= epoch) ++keep;
  if (keep == records_.size()) return;
  records_.resize(keep);
  if (memory_.size() > keep) memory_.resize(keep);
  if (directory_) write_index();
}

std::string CheckpointBank::index_text() const {
  std::ostringstream os;
  os << "epoch\tval_acc\tval_mf1\ttrain_loss\ttrain_acc\tfile\n";
  for (const auto& r : records_) {
    os << r.epoch << "\t" << format_double(r.val_acc) << "\t" << format_double(r.val_mf1)
       << "\t" << format_double(r.train_loss) << "\t" << format_double(r.train_acc) << "\t"
       << r.file << "\n";
  }
  return os.str();
}

std::vector<EpochRecord> CheckpointBank::parse_index(std::string_view text) {
  std::vector<EpochRecord> out;
  bool header = true;
  for (std::string_view line : split_view(text, '\n')) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_view(line, '\t');
    if (f.size() != 6) throw DataError("checkpoint bank index row has the wrong field count");
    EpochRecord r;
    r.epoch = parse_int(f[0], "bank epoch");
    r.val_acc = parse_double(f[1], "bank val_acc");
    r.val_mf1 = parse_double(f[2], "bank val_mf1");
    r.train_loss = parse_double(f[3], "bank train_loss");
    r.train_acc = parse_double(f[4], "bank train_acc");
    r.file = std::string(f[5]);
    out.push_back(std::move(r));
  }
  return out;
}

void CheckpointBank::write_index() const {
  write_text_file(*directory_ / kIndexName, index_text());
}

// ---------------------------------------------------------------------------
// Checkpoint encoding.

namespace {

ad::NamedArray arch_array(const ClassifierArchitecture& a) {
  return {"arch",
          {7},
          {static_cast<double>(a.epoch_length), a.sampling_rate,
           static_cast<double>(a.filters[0]), static_cast<double>(a.filters[1]),
           static_cast<double>(a.filters[2]), static_cast<double>(a.hidden), a.dropout}};
}

ClassifierArchitecture arch_from(const ad::ParamSnapshot& arrays) {
  auto it = std::find_if(arrays.begin(), arrays.end(),
                         [](const auto& a) { return a.name == "arch"; });
  if (it == arrays.end() || it->values.size() != 7) {
    throw DataError("checkpoint lacks the classifier architecture record");
  }
  const auto& v = it->values;
  ClassifierArchitecture a;
  a.epoch_length = static_cast<std::size_t>(v[0]);
  a.sampling_rate = v[1];
  for (std::size_t i = 0; i < 3; ++i) a.filters[i] = static_cast<std::size_t>(v[2 + i]);
  a.hidden = static_cast<std::size_t>(v[5]);
  a.dropout = v[6];
  return a;
}

bool same_arch(const ClassifierArchitecture& a, const ClassifierArchitecture& b) {
  return a.epoch_length == b.epoch_length && a.sampling_rate == b.sampling_rate &&
         a.filters == b.filters && a.hidden == b.hidden && a.dropout == b.dropout;
}

}  // namespace

ad::Checkpoint classifier_checkpoint(const Classifier& classifier,
                                     const EpochRecord& record, std::uint64_t seed) {
  ad::Checkpoint cp;
  cp.meta.kind = "classifier";
  cp.meta.epoch = record.epoch;
  cp.meta.val_acc = record.val_acc;
  cp.meta.val_mf1 = record.val_mf1;
  cp.meta.seed = seed;
  cp.arrays.push_back(arch_array(classifier.architecture()));
  ad::append_prefixed(cp.arrays, classifier.params().snapshot(), "clf/");
  return cp;
}

Classifier load_classifier(const ad::Checkpoint& cp) {
  if (cp.meta.kind != "classifier" && cp.meta.kind != "classifier-resume") {
    throw DataError("checkpoint of kind '" + cp.meta.kind + "' holds no classifier");
  }
  Classifier c(arch_from(cp.arrays), 0);
  c.params().load(ad::select_prefixed(cp.arrays, "clf/"));
  return c;
}

// ---------------------------------------------------------------------------
// Training.

ClassifierTrainer::ClassifierTrainer(const ClassifierArchitecture& arch,
                                     const ClfTrainConfig& config)
    : arch_(arch), config_(config), classifier_(arch, config.seed) {
  config_.validate();
  if (config_.max_shift == 0) config_.max_shift = arch_.epoch_length / 2;
  const auto tensors = classifier_.params().tensors();
  adam_ = ad::make_adam_state(tensors, config_.learning_rate, config_.beta1, config_.beta2);
}

void ClassifierTrainer::set_data(std::vector<LabeledEpoch> train,
                                 std::vector<LabeledEpoch> validation) {
  if (train.empty()) throw ConfigError("classifier training set is empty");
  if (validation.empty()) {
    throw ConfigError("classifier validation set is empty; checkpoint ranking needs it");
  }
  for (const auto* set : {&train, &validation}) {
    for (const auto& e : *set) {
      if (e.samples.size() != arch_.epoch_length) {
        throw DataError("epoch has " + std::to_string(e.samples.size()) +
                        " samples, classifier expects " + std::to_string(arch_.epoch_length));
      }
    }
  }
  for (const auto& e : validation) {
    if (e.source == EpochSource::kGenerated) {
      throw DataError("generated epochs may not enter the validation set");
    }
  }
  train_ = std::move(train);
  validation_ = std::move(validation);
  train_streams_ = data::build_streams(train_);
}

EpochRecord ClassifierTrainer::train_epoch(std::int64_t epoch) {
  if (train_.empty()) throw UsageError("ClassifierTrainer::set_data must precede training");
  Rng rng = make_rng(config_.seed, "clf-epoch", static_cast<std::uint64_t>(epoch));
  const std::size_t len = config_.sequence_length;
  const std::size_t e = arch_.epoch_length;

  std::vector<std::vector<std::size_t>> sequences;
  if (config_.sequence_augment) {
    sequences = data::plan_sequences(train_streams_, len, rng);
  } else {
    for (const auto& s : train_streams_) {
      for (std::size_t start : data::chunk_starts(s.members.size(), len, 0)) {
        sequences.emplace_back(s.members.begin() + static_cast<std::ptrdiff_t>(start),
                               s.members.begin() + static_cast<std::ptrdiff_t>(start + len));
      }
    }
  }
  if (sequences.empty()) {
    throw DataError("no training stream reaches the sequence length " + std::to_string(len));
  }
  std::shuffle(sequences.begin(), sequences.end(), rng);

  auto tensors = classifier_.params().tensors();
  double loss_sum = 0.0;
  std::size_t correct = 0, seen = 0, batches = 0;
  for (std::size_t start = 0; start < sequences.size(); start += config_.batch_size) {
    const std::size_t b = std::min(config_.batch_size, sequences.size() - start);
    std::vector<double> buf(b * len * e);
    std::vector<int> labels;
    labels.reserve(b * len);
    for (std::size_t i = 0; i < b; ++i) {
      double* dst = buf.data() + i * len * e;
      const auto& seq = sequences[start + i];
      for (std::size_t t = 0; t < len; ++t) {
        const auto& ep = train_[seq[t]];
        std::copy(ep.samples.begin(), ep.samples.end(), dst + t * e);
        labels.push_back(static_cast<int>(ep.stage));
      }
      if (config_.signal_augment) {
        const std::int64_t shift = data::draw_shift(config_.max_shift, e, rng);
        data::circular_shift_inplace(std::span(dst, len * e), shift);
      }
    }
    classifier_.params().zero_grad();
    SequenceOutput out = classifier_.forward(Tensor({b, len, e}, std::move(buf)), true, &rng);
    Tensor logits = ad::reshape(out.logits, {b * len, kNumStages});
    Tensor loss = ad::weighted_cross_entropy(logits, labels, config_.class_weights);
    loss_sum += loss.item();
    const auto preds = predict(logits);
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
    seen += preds.size();
    ++batches;
    loss.backward();
    ad::clip_grad_norm(tensors, config_.clip_norm);
    ad::adam_step(tensors, adam_);
  }
  classifier_.params().zero_grad();

  EpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss = loss_sum / static_cast<double>(batches);
  rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
  if (!std::isfinite(rec.train_loss)) {
    throw DataError("classifier loss became non-finite at epoch " + std::to_string(epoch));
  }
  const auto probs = infer_probabilities(classifier_, validation_, len);
  std::vector<int> truth, pred;
  truth.reserve(validation_.size());
  pred.reserve(validation_.size());
  for (std::size_t i = 0; i < validation_.size(); ++i) {
    truth.push_back(static_cast<int>(validation_[i].stage));
    pred.push_back(argmax5(probs[i]));
  }
  const eval::MetricsReport m = eval::metrics(truth, pred);
  rec.val_acc = m.acc;
  rec.val_mf1 = m.mf1;
  return rec;
}

ad::Checkpoint ClassifierTrainer::resume_state(std::int64_t epoch) const {
  ad::Checkpoint cp;
  cp.meta.kind = "classifier-resume";
  cp.meta.epoch = epoch;
  cp.meta.seed = config_.seed;
  cp.meta.step = adam_.step_count;
  cp.arrays.push_back(arch_array(arch_));
  ad::append_prefixed(cp.arrays, classifier_.params().snapshot(), "clf/");
  ad::ParamSnapshot moments;
  ad::append_adam_arrays(classifier_.params(), adam_, moments);
  ad::append_prefixed(cp.arrays, moments, "opt/");
  return cp;
}

void ClassifierTrainer::restore(const ad::Checkpoint& state) {
  if (state.meta.kind != "classifier-resume") {
    throw DataError("expected a classifier resume checkpoint, found '" + state.meta.kind + "'");
  }
  if (state.meta.seed != config_.seed) {
    throw ConfigError("resume checkpoint was trained with seed " +
                      std::to_string(state.meta.seed) + ", config says " +
                      std::to_string(config_.seed));
  }
  if (!same_arch(arch_from(state.arrays), arch_)) {
    throw ConfigError("resume checkpoint architecture differs from the configuration");
  }
  classifier_.params().load(ad::select_prefixed(state.arrays, "clf/"));
  ad::restore_adam_arrays(classifier_.params(), ad::select_prefixed(state.arrays, "opt/"),
                          adam_);
  adam_.step_count = state.meta.step;
  next_epoch_ = state.meta.epoch + 1;
}

void ClassifierTrainer::train(CheckpointBank& bank, bool resume,
                              std::optional<std::int64_t> stop_after_epoch,
                              const std::function<void(const EpochRecord&)>& on_epoch) {
  const auto& dir = bank.directory();
  if (resume && dir && std::filesystem::exists(*dir / kResumeName)) {
    restore(ad::load_checkpoint(*dir / kResumeName));
    bank.truncate_after(next_epoch_ - 1);
    log::info("resuming classifier training at epoch " + std::to_string(next_epoch_));
  } else if (resume && !bank.records().empty() && !dir) {
    throw UsageError("in-memory banks cannot resume");
  } else if (next_epoch_ == 0) {
    bank.truncate_after(-1);
  }
  for (auto e = next_epoch_; e < static_cast<std::int64_t>(config_.train_epochs); ++e) {
    EpochRecord rec = train_epoch(e);
    bank.add(rec, classifier_checkpoint(classifier_, rec, config_.seed));
    if (dir) ad::save_checkpoint(*dir / kResumeName, resume_state(e));
    next_epoch_ = e + 1;
    if (on_epoch) on_epoch(bank.records().back());
    if (stop_after_epoch && e >= *stop_after_epoch) break;
  }
}

}  // namespace somnus::clf
