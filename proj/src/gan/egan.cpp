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

#include "somnus/gan/egan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "somnus/ad/init.hpp"
#include "somnus/ad/ops.hpp"
#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/log.hpp"

namespace somnus::gan {

using ad::Tensor;

std::size_t GanArchitecture::first_kernel() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(sampling_rate / 2.0)));
}

std::size_t GanArchitecture::first_stride() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(sampling_rate / 16.0)));
}

void GanArchitecture::validate() const {
  if (noise_dim == 0 || epoch_length == 0 || hidden == 0) {
    throw ConfigError("GAN noise_dim, epoch length and hidden size must be positive");
  }
  if (!(sampling_rate > 0.0)) throw ConfigError("GAN sampling rate must be positive");
  for (std::size_t f : filters) {
    if (f == 0) throw ConfigError("GAN filter counts must be positive");
  }
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky ReLU slope must lie in (0, 1)");
  if (first_kernel() > epoch_length) {
    throw ConfigError("first GAN kernel (" + std::to_string(first_kernel()) +
                      ") exceeds the epoch length (" + std::to_string(epoch_length) + ")");
  }
}

GanArchitecture sleep_edf_architecture() { return {}; }

GanArchitecture shhs_architecture() {
  GanArchitecture a;
  a.noise_dim = 125;
  a.epoch_length = 3750;
  a.sampling_rate = 125.0;
  return a;
}

namespace {

void build_convs(ad::ParamSet& params, const GanArchitecture& arch, Rng& rng,
                 std::array<ad::Conv1dLayer, 4>& convs) {
  convs[0] = ad::make_conv(params, "conv0", 1, arch.filters[0], arch.first_kernel(),
                           arch.first_stride(), false, rng);
  for (std::size_t i = 1; i < 4; ++i) {
    convs[i] = ad::make_conv(params, "conv" + std::to_string(i), arch.filters[i - 1],
                             arch.filters[i], 8, 1, true, rng);
  }
}

Tensor pool_same(const Tensor& x, std::size_t window) {
  return ad::maxpool1d(x, window, window, ad::same_pool_pad(x.dim(2), window));
}

}  // namespace

Generator::Generator(const GanArchitecture& arch, std::uint64_t seed) : arch_(arch) {
  arch_.validate();
  Rng rng = make_rng(seed, "generator-init");
  build_convs(params_, arch_, rng, convs_);
  lstm_ = ad::make_lstm(params_, "lstm", arch_.filters[3], arch_.hidden, rng);
  head_ = ad::make_linear(params_, "head", arch_.hidden, arch_.epoch_length, rng);
}

Tensor Generator::forward(const Tensor& noise) const {
  if (noise.rank() != 2 || noise.dim(1) != arch_.noise_dim) {
    throw ShapeError("generator expects noise [B, " + std::to_string(arch_.noise_dim) +
                     "], got " + ad::shape_str(noise.shape()));
  }
  const std::size_t batch = noise.dim(0);
  Tensor x = ad::reshape(ad::upsample_linear(noise, arch_.epoch_length),
                         {batch, 1, arch_.epoch_length});
  for (const auto& conv : convs_) x = ad::leaky_relu(conv(x), arch_.slope);
  ad::LstmState state =
      ad::run_lstm(lstm_, ad::transpose12(x), ad::zero_state(batch, arch_.hidden));
  return ad::tanh(head_(state.h));
}

Discriminator::Discriminator(const GanArchitecture& arch, std::uint64_t seed)
    : arch_(arch) {
  arch_.validate();
  Rng rng = make_rng(seed, "discriminator-init");
  build_convs(params_, arch_, rng, convs_);
  lstm_ = ad::make_lstm(params_, "lstm", arch_.filters[3], arch_.hidden, rng);
  head_ = ad::make_linear(params_, "head", arch_.hidden, 1, rng);
}

Tensor Discriminator::forward(const Tensor& epochs) const {
  if (epochs.rank() != 2 || epochs.dim(1) != arch_.epoch_length) {
    throw ShapeError("discriminator expects epochs [B, " +
                     std::to_string(arch_.epoch_length) + "], got " +
                     ad::shape_str(epochs.shape()));
  }
  const std::size_t batch = epochs.dim(0);
  Tensor x = ad::reshape(epochs, {batch, 1, arch_.epoch_length});
  x = pool_same(ad::leaky_relu(convs_[0](x), arch_.slope), 4);
  for (std::size_t i = 1; i < 4; ++i) x = ad::leaky_relu(convs_[i](x), arch_.slope);
  x = pool_same(x, 2);
  ad::LstmState state =
      ad::run_lstm(lstm_, ad::transpose12(x), ad::zero_state(batch, arch_.hidden));
  return ad::reshape(ad::sigmoid(head_(state.h)), {batch});
}

void GanTrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("gan.batch_size must be positive");
  if (d_steps == 0) throw ConfigError("GAN discriminator steps must be positive");
  if (!(d_learning_rate >= 0.0)) throw ConfigError("gan.d_learning_rate must be non-negative");
  if (!(real_label > 0.5 && real_label <= 1.0)) {
    throw ConfigError("gan.real_label must lie in (0.5, 1]");
  }
  if (!(instance_noise >= 0.0) || !(instance_noise_final >= 0.0)) {
    throw ConfigError("gan.instance_noise settings must be non-negative");
  }
  ad::AdamState probe;
  probe.learning_rate = learning_rate;
  probe.beta1 = beta1;
  probe.beta2 = beta2;
  probe.validate();
}

void require_normalized(std::span<const LabeledEpoch> epochs) {
  for (const auto& e : epochs) {
    for (float v : e.samples) {
      if (!(v >= -1.0f && v <= 1.0f)) {
        throw DataError("GAN input must be normalized to [-1, 1]; epoch " +
                        std::to_string(e.index) + " of '" + e.recording_id +
                        "' holds " + std::to_string(v));
      }
    }
  }
}

Tensor stack_epochs(std::span<const LabeledEpoch> epochs,
                    std::span<const std::size_t> order) {
  if (order.empty()) throw ShapeError("cannot stack an empty batch");
  const std::size_t len = epochs[order[0]].samples.size();
  std::vector<double> data;
  data.reserve(order.size() * len);
  for (std::size_t i : order) {
    const auto& s = epochs[i].samples;
    if (s.size() != len) throw ShapeError("epochs in a batch differ in length");
    data.insert(data.end(), s.begin(), s.end());
  }
  return Tensor({order.size(), len}, std::move(data));
}

GanTrainer::GanTrainer(const GanArchitecture& arch, const GanTrainConfig& config)
    : arch_(arch),
      config_(config),
      generator_(arch, config.seed),
      discriminator_(arch, config.seed) {
  config_.validate();
  const auto g = generator_.params().tensors();
  const auto d = discriminator_.params().tensors();
  g_adam_ = ad::make_adam_state(g, config_.learning_rate, config_.beta1, config_.beta2);
  const double d_lr =
      config_.d_learning_rate > 0.0 ? config_.d_learning_rate : config_.learning_rate;
  d_adam_ = ad::make_adam_state(d, d_lr, config_.beta1, config_.beta2);
}

void GanTrainer::set_real(std::vector<LabeledEpoch> real) {
  if (real.size() < 2 * config_.batch_size) {
    throw DataError("GAN training needs at least " +
                    std::to_string(2 * config_.batch_size) + " real epochs, got " +
                    std::to_string(real.size()));
  }
  for (const auto& e : real) {
    if (e.samples.size() != arch_.epoch_length) {
      throw DataError("real epoch has " + std::to_string(e.samples.size()) +
                      " samples, GAN expects " + std::to_string(arch_.epoch_length));
    }
  }
  require_normalized(real);
  real_ = std::move(real);
}

Tensor GanTrainer::noise(std::size_t batch, Rng& rng) const {
  return ad::standard_normal({batch, arch_.noise_dim}, rng);
}

double GanTrainer::noise_std() const {
  if (config_.train_epochs == 0) return config_.instance_noise;
  const double progress = std::min(
      1.0, static_cast<double>(current_epoch_) / static_cast<double>(config_.train_epochs));
  return config_.instance_noise +
         (config_.instance_noise_final - config_.instance_noise) * progress;
}

Tensor GanTrainer::perturb(const Tensor& x, Rng& rng) const {
  const double sigma = noise_std();
  if (sigma == 0.0) return x;
  return ad::add(x, ad::scale(ad::standard_normal(x.shape(), rng), sigma));
}

DStepResult GanTrainer::d_step(const Tensor& real_batch, Rng& rng) {
  const std::size_t batch = real_batch.dim(0);
  Tensor fake;
  {
    ad::NoGradGuard guard;
    fake = generator_.forward(noise(batch, rng));
  }
  discriminator_.params().zero_grad();
  Tensor p_real = discriminator_.forward(perturb(real_batch, rng));
  Tensor p_fake = discriminator_.forward(perturb(fake, rng));
  Tensor loss = ad::add(ad::bce_loss(p_real, Tensor::full({batch}, config_.real_label)),
                        ad::bce_loss(p_fake, Tensor::zeros({batch})));
  DStepResult out;
  out.loss = loss.item();
  for (std::size_t i = 0; i < batch; ++i) {
    out.correct += p_real.data()[i] > 0.5;
    out.correct += p_fake.data()[i] < 0.5;
  }
  out.total = 2 * batch;
  loss.backward();
  auto params = discriminator_.params().tensors();
  ad::adam_step(params, d_adam_);
  discriminator_.params().zero_grad();
  return out;
}

double GanTrainer::g_step(std::size_t batch, Rng& rng) {
  generator_.params().zero_grad();
  Tensor fake = perturb(generator_.forward(noise(batch, rng)), rng);
  Tensor loss = ad::bce_loss(discriminator_.forward(fake), Tensor::full({batch}, 1.0));
  const double value = loss.item();
  loss.backward();
  auto params = generator_.params().tensors();
  ad::adam_step(params, g_adam_);
  generator_.params().zero_grad();
  discriminator_.params().zero_grad();
  return value;
}

GanEpochLog GanTrainer::train_epoch(std::int64_t epoch) {
  if (real_.empty()) throw UsageError("GanTrainer::set_real must precede training");
  Rng rng = make_rng(config_.seed, "gan-epoch", static_cast<std::uint64_t>(epoch));
  current_epoch_ = epoch;
  std::vector<std::size_t> order(real_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t b = config_.batch_size;
  const std::size_t batches = real_.size() / b;
  GanEpochLog entry;
  entry.epoch = epoch;
  std::size_t correct = 0, total = 0, d_updates = 0;
  for (std::size_t k = 0; k < batches; ++k) {
    const Tensor real_batch =
        stack_epochs(real_, std::span(order).subspan(k * b, b));
    for (std::size_t s = 0; s < config_.d_steps; ++s) {
      const DStepResult r = d_step(real_batch, rng);
      entry.d_loss += r.loss;
      correct += r.correct;
      total += r.total;
      ++d_updates;
    }
    entry.g_loss += g_step(b, rng);
  }
  entry.d_loss /= static_cast<double>(d_updates);
  entry.g_loss /= static_cast<double>(batches);
  entry.d_acc = static_cast<double>(correct) / static_cast<double>(total);
  if (!std::isfinite(entry.d_loss) || !std::isfinite(entry.g_loss)) {
    throw DataError("GAN losses became non-finite at epoch " + std::to_string(epoch));
  }
  return entry;
}

void GanTrainer::train(const std::optional<std::filesystem::path>& dir,
                       std::optional<std::int64_t> stop_after_epoch,
                       const std::function<void(const GanEpochLog&)>& on_epoch) {
  const std::int64_t start = log_.empty() ? 0 : log_.back().epoch + 1;
  for (auto e = start; e < static_cast<std::int64_t>(config_.train_epochs); ++e) {
    log_.push_back(train_epoch(e));
    if (on_epoch) on_epoch(log_.back());
    if (dir) {
      if (config_.checkpoint_every > 0 &&
          (static_cast<std::size_t>(e) + 1) % config_.checkpoint_every == 0) {
        char name[64];
        std::snprintf(name, sizeof(name), "gan-epoch-%04lld.segk", static_cast<long long>(e));
        ad::save_checkpoint(*dir / name, generator_checkpoint(generator_, config_.target_stage,
                                                              e, config_.seed));
      }
      ad::save_checkpoint(*dir / "gan-resume.segk", checkpoint());
    }
    if (stop_after_epoch && e >= *stop_after_epoch) break;
  }
}

namespace {

ad::NamedArray arch_array(const GanArchitecture& a, Stage stage) {
  return {"arch",
          {10},
          {static_cast<double>(a.noise_dim), static_cast<double>(a.epoch_length),
           a.sampling_rate, static_cast<double>(a.filters[0]),
           static_cast<double>(a.filters[1]), static_cast<double>(a.filters[2]),
           static_cast<double>(a.filters[3]), static_cast<double>(a.hidden), a.slope,
           static_cast<double>(stage)}};
}

std::pair<GanArchitecture, Stage> arch_from(const ad::ParamSnapshot& arrays) {
  auto it = std::find_if(arrays.begin(), arrays.end(),
                         [](const auto& a) { return a.name == "arch"; });
  if (it == arrays.end() || it->values.size() != 10) {
    throw DataError("checkpoint lacks the GAN architecture record");
  }
  const auto& v = it->values;
  GanArchitecture a;
  a.noise_dim = static_cast<std::size_t>(v[0]);
  a.epoch_length = static_cast<std::size_t>(v[1]);
  a.sampling_rate = v[2];
  for (std::size_t i = 0; i < 4; ++i) a.filters[i] = static_cast<std::size_t>(v[3 + i]);
  a.hidden = static_cast<std::size_t>(v[7]);
  a.slope = v[8];
  return {a, stage_from_index(static_cast<int>(v[9]))};
}

}  // namespace

ad::Checkpoint GanTrainer::checkpoint() const {
  ad::Checkpoint cp;
  cp.meta.kind = "gan";
  cp.meta.epoch = log_.empty() ? -1 : log_.back().epoch;
  cp.meta.seed = config_.seed;
  cp.meta.step = g_adam_.step_count;
  cp.arrays.push_back(arch_array(arch_, config_.target_stage));
  cp.arrays.push_back({"steps",
                       {2},
                       {static_cast<double>(g_adam_.step_count),
                        static_cast<double>(d_adam_.step_count)}});
  ad::NamedArray logs{"log", {log_.size(), 4}, {}};
  for (const auto& l : log_) {
    logs.values.insert(logs.values.end(),
                       {static_cast<double>(l.epoch), l.d_loss, l.g_loss, l.d_acc});
  }
  cp.arrays.push_back(std::move(logs));
  ad::append_prefixed(cp.arrays, generator_.params().snapshot(), "gen/");
  ad::append_prefixed(cp.arrays, discriminator_.params().snapshot(), "disc/");
  ad::ParamSnapshot g_moments, d_moments;
  ad::append_adam_arrays(generator_.params(), g_adam_, g_moments);
  ad::append_adam_arrays(discriminator_.params(), d_adam_, d_moments);
  ad::append_prefixed(cp.arrays, g_moments, "gen_opt/");
  ad::append_prefixed(cp.arrays, d_moments, "disc_opt/");
  return cp;
}

void GanTrainer::restore(const ad::Checkpoint& cp) {
  if (cp.meta.kind != "gan") {
    throw DataError("expected a GAN training checkpoint, found kind '" + cp.meta.kind + "'");
  }
  if (cp.meta.seed != config_.seed) {
    throw ConfigError("resume checkpoint was trained with seed " +
                      std::to_string(cp.meta.seed) + ", config says " +
                      std::to_string(config_.seed));
  }
  const auto [arch, stage] = arch_from(cp.arrays);
  (void)stage;
  if (arch.noise_dim != arch_.noise_dim || arch.epoch_length != arch_.epoch_length ||
      arch.filters != arch_.filters || arch.hidden != arch_.hidden) {
    throw ConfigError("resume checkpoint architecture differs from the configuration");
  }
  generator_.params().load(ad::select_prefixed(cp.arrays, "gen/"));
  discriminator_.params().load(ad::select_prefixed(cp.arrays, "disc/"));
  ad::restore_adam_arrays(generator_.params(), ad::select_prefixed(cp.arrays, "gen_opt/"),
                          g_adam_);
  ad::restore_adam_arrays(discriminator_.params(),
                          ad::select_prefixed(cp.arrays, "disc_opt/"), d_adam_);
  log_.clear();
  for (const auto& a : cp.arrays) {
    if (a.name == "steps" && a.values.size() == 2) {
      g_adam_.step_count = static_cast<std::uint64_t>(a.values[0]);
      d_adam_.step_count = static_cast<std::uint64_t>(a.values[1]);
    } else if (a.name == "log") {
      for (std::size_t i = 0; i + 3 < a.values.size(); i += 4) {
        log_.push_back({static_cast<std::int64_t>(a.values[i]), a.values[i + 1],
                        a.values[i + 2], a.values[i + 3]});
      }
    }
  }
}

ad::Checkpoint generator_checkpoint(const Generator& generator, Stage stage,
                                    std::int64_t epoch, std::uint64_t seed) {
  ad::Checkpoint cp;
  cp.meta.kind = "generator";
  cp.meta.epoch = epoch;
  cp.meta.seed = seed;
  cp.arrays.push_back(arch_array(generator.architecture(), stage));
  ad::append_prefixed(cp.arrays, generator.params().snapshot(), "gen/");
  return cp;
}

LoadedGenerator load_generator(const ad::Checkpoint& cp) {
  if (cp.meta.kind != "generator" && cp.meta.kind != "gan") {
    throw DataError("checkpoint of kind '" + cp.meta.kind + "' holds no generator");
  }
  auto [arch, stage] = arch_from(cp.arrays);
  LoadedGenerator out{Generator(arch, 0), stage};
  out.generator.params().load(ad::select_prefixed(cp.arrays, "gen/"));
  return out;
}

std::vector<LabeledEpoch> sample_minority(const Generator& generator, std::size_t n,
                                          Stage stage, std::uint64_t seed,
                                          std::size_t batch) {
  if (batch == 0) throw ConfigError("sampling batch must be positive");
  ad::NoGradGuard guard;
  Rng rng = make_rng(seed, "gan-sample");
  const std::size_t len = generator.architecture().epoch_length;
  const float edge = std::nextafter(1.0f, 0.0f);
  std::vector<LabeledEpoch> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::size_t b = std::min(batch, n - out.size());
    Tensor x = generator.forward(
        ad::standard_normal({b, generator.architecture().noise_dim}, rng));
    for (std::size_t i = 0; i < b; ++i) {
      LabeledEpoch e;
      e.stage = stage;
      e.source = EpochSource::kGenerated;
      e.subject_id = "generated";
      e.recording_id = "generated:" + std::string(stage_name(stage));
      e.index = static_cast<std::int64_t>(out.size());
      e.samples.resize(len);
      for (std::size_t t = 0; t < len; ++t) {
        e.samples[t] = std::clamp(static_cast<float>(x.data()[i * len + t]), -edge, edge);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

double discriminator_accuracy(const Discriminator& discriminator,
                              std::span<const LabeledEpoch> real,
                              std::span<const LabeledEpoch> fake) {
  ad::NoGradGuard guard;
  std::size_t correct = 0;
  auto score = [&](std::span<const LabeledEpoch> set, bool is_real) {
    for (std::size_t start = 0; start < set.size(); start += 64) {
      const std::size_t end = std::min(start + 64, set.size());
      std::vector<std::size_t> idx(end - start);
      std::iota(idx.begin(), idx.end(), start);
      Tensor p = discriminator.forward(stack_epochs(set, idx));
      for (double v : p.data()) correct += is_real ? v > 0.5 : v < 0.5;
    }
  };
  score(real, true);
  score(fake, false);
  const std::size_t total = real.size() + fake.size();
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace somnus::gan
