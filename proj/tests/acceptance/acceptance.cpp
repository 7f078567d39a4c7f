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

// Acceptance suite: one PASS/FAIL line per criterion, tolerances as pinned in
// the project's acceptance contract. Exit status is the number of failures.
//
//   acceptance            run every criterion
//   acceptance 3 4 9      run a subset (criterion 9 trains its own caches
//                         when criterion 5 is not part of the run)

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edf_fixtures.hpp"
#include "gradcheck.hpp"
#include "somnus/ad/ops.hpp"
#include "somnus/ad/tensor.hpp"
#include "somnus/cli/commands.hpp"
#include "somnus/clf/classifier.hpp"
#include "somnus/core/bytes.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/log.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/data/pipeline.hpp"
#include "somnus/data/synthetic.hpp"
#include "somnus/edf/edf.hpp"
#include "somnus/eval/ensemble.hpp"
#include "somnus/eval/metrics.hpp"
#include "somnus/gan/diagnostics.hpp"
#include "somnus/gan/egan.hpp"

using namespace somnus;
using ad::Tensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// Pooled caches from the learning runs, reused by the M sweep.
std::vector<eval::PredictionCache> g_learning_caches;

// ---------------------------------------------------------------------------
// 1. Gradient correctness.

Tensor random_tensor(ad::Shape shape, Rng& rng, bool grad = true, double s = 1.0) {
  std::normal_distribution<double> dist(0.0, s);
  std::vector<double> v(ad::shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), grad);
}

Tensor probe(const Tensor& y, std::uint64_t seed = 5) {
  Rng rng(seed);
  return ad::sum(ad::mul(y, random_tensor(y.shape(), rng, false)));
}

Outcome criterion_gradients() {
  constexpr double kTol = 1e-4;
  constexpr double kH = 1e-5;
  Rng rng(2024);
  std::vector<std::pair<std::string, testing::GradCheckResult>> results;
  auto check = [&](const std::string& name, const std::function<Tensor()>& f,
                   std::vector<std::pair<std::string, Tensor>> params) {
    results.emplace_back(name, testing::check_gradients(f, std::move(params), kH));
  };

  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  check("add", [&] { return probe(ad::add(a, b)); }, {{"a", a}, {"b", b}});
  check("sub", [&] { return probe(ad::sub(a, b)); }, {{"a", a}, {"b", b}});
  check("mul", [&] { return probe(ad::mul(a, b)); }, {{"a", a}, {"b", b}});
  check("scale", [&] { return probe(ad::scale(a, -1.7)); }, {{"a", a}});
  check("sum", [&] { return ad::scale(ad::sum(ad::mul(a, a)), 0.5); }, {{"a", a}});
  check("mean", [&] { return ad::mean(ad::mul(a, b)); }, {{"a", a}, {"b", b}});
  check("reshape", [&] { return probe(ad::reshape(a, {2, 6})); }, {{"a", a}});
  Tensor w = random_tensor({5, 4}, rng), bias = random_tensor({5}, rng);
  check("linear", [&] { return probe(ad::linear(a, w, bias)); },
        {{"x", a}, {"w", w}, {"b", bias}});
  Tensor x = random_tensor({2, 3, 17}, rng), cw = random_tensor({4, 3, 5}, rng, true, 0.5);
  Tensor cb = random_tensor({4}, rng);
  check("conv1d", [&] { return probe(ad::conv1d(x, cw, cb, 2, 1, 3)); },
        {{"x", x}, {"w", cw}, {"b", cb}});
  check("maxpool1d", [&] { return probe(ad::maxpool1d(x, 4, 3, 2)); }, {{"x", x}});
  // Offsets keep inputs away from the kinks of the piecewise-linear ops.
  Tensor k = Tensor({2, 5}, {-1.3, -0.7, -0.2, 0.4, 0.9, 1.6, -2.1, 0.35, -0.45, 2.2}, true);
  check("relu", [&] { return probe(ad::relu(k)); }, {{"x", k}});
  check("leaky_relu", [&] { return probe(ad::leaky_relu(k, 0.2)); }, {{"x", k}});
  check("tanh", [&] { return probe(ad::tanh(a)); }, {{"x", a}});
  check("sigmoid", [&] { return probe(ad::sigmoid(a)); }, {{"x", a}});
  check("softmax", [&] { return probe(ad::softmax(x, 1)); }, {{"x", x}});
  check("dropout",
        [&] {
          Rng mask(77);
          return probe(ad::dropout(a, 0.3, true, mask));
        },
        {{"x", a}});
  Tensor logits = random_tensor({6, 5}, rng);
  const std::vector<int> labels{0, 1, 2, 3, 4, 1};
  check("weighted_cross_entropy",
        [&] {
          return ad::weighted_cross_entropy(logits, labels, ad::ClassWeights{{1, 1.5, 1, 1, 1}});
        },
        {{"logits", logits}});
  Tensor z = random_tensor({6}, rng);
  const Tensor targets({6}, {1, 0, 0.9, 1, 0, 0.1});
  check("bce_loss", [&] { return ad::bce_loss(ad::sigmoid(z), targets); }, {{"z", z}});
  Tensor lx = random_tensor({2, 3}, rng), h0 = random_tensor({2, 4}, rng),
         c0 = random_tensor({2, 4}, rng);
  ad::LstmWeights lw{random_tensor({16, 3}, rng, true, 0.5), random_tensor({16, 4}, rng, true, 0.5),
                     random_tensor({16}, rng, true, 0.5)};
  check("lstm_step",
        [&] {
          auto s = ad::lstm_step(lx, h0, c0, lw);
          return ad::add(probe(s.h, 1), probe(s.c, 2));
        },
        {{"x", lx}, {"h", h0}, {"c", c0}, {"w_ih", lw.w_ih}, {"w_hh", lw.w_hh},
         {"bias", lw.bias}});
  check("sequence plumbing",
        [&] {
          Tensor t = ad::transpose12(x);
          std::vector<Tensor> steps;
          for (std::size_t i = 0; i < 17; i += 4) steps.push_back(ad::select_step(t, i));
          Tensor s = ad::stack_steps(steps);
          return probe(ad::slice_cols(ad::reshape(s, {2, 15}), 2, 11));
        },
        {{"x", x}});
  Tensor u = random_tensor({2, 5}, rng);
  check("upsample_linear", [&] { return probe(ad::upsample_linear(u, 13)); }, {{"x", u}});

  clf::ClassifierArchitecture arch;
  arch.epoch_length = 64;
  arch.sampling_rate = 16.0;
  arch.filters = {3, 3, 4};
  arch.hidden = 8;
  arch.dropout = 0.0;
  const clf::Classifier net(arch, 11);
  const Tensor seq = random_tensor({2, 3, 64}, rng, false);
  const std::vector<int> seq_labels{0, 1, 2, 4, 3, 1};
  std::vector<std::pair<std::string, Tensor>> params;
  for (const auto& e : net.params().entries()) params.emplace_back(e.name, e.tensor);
  check("classifier (E=64, hidden 8, L=3)",
        [&] {
          Tensor lg = ad::reshape(net.forward(seq, false).logits, {6, 5});
          return ad::weighted_cross_entropy(lg, seq_labels, ad::ClassWeights{{1, 1.5, 1, 1, 1}});
        },
        params);

  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  for (const auto& [name, r] : results) {
    checked += r.checked;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      where = name + " " + r.worst;
    }
  }
  return {worst < kTol, std::to_string(results.size()) + " checks, " + std::to_string(checked) +
                            " coordinates, max rel err " + fmt("%.2e", worst) + " (" + where +
                            ") < 1e-4"};
}

// ---------------------------------------------------------------------------
// 2. Architecture shapes.

Outcome criterion_shapes() {
  Rng rng(3);
  std::ostringstream os;
  bool ok = true;
  for (const auto& arch : {gan::sleep_edf_architecture(), gan::shhs_architecture()}) {
    const gan::Generator g(arch, 1);
    ad::NoGradGuard guard;
    const Tensor out = g.forward(random_tensor({2, arch.noise_dim}, rng, false));
    const bool shape_ok = out.shape() == ad::Shape{2, arch.epoch_length};
    ok = ok && shape_ok;
    os << "G [2," << arch.noise_dim << "]->[" << out.shape()[0] << "," << out.shape()[1] << "] ";
  }
  const clf::Classifier c(clf::sleep_edf_classifier(), 2);
  ad::NoGradGuard guard;
  const Tensor p = c.classify_sequence(random_tensor({2, 20, 3000}, rng, false), false);
  ok = ok && p.shape() == ad::Shape{2, 20, 5};
  double worst = 0.0;
  for (std::size_t r = 0; r < 40; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < 5; ++k) s += p.data()[r * 5 + k];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  ok = ok && worst <= 1e-12;
  os << "C [2,20,3000]->[" << p.shape()[0] << "," << p.shape()[1] << "," << p.shape()[2]
     << "], max |row sum - 1| " << fmt("%.1e", worst) << " <= 1e-12";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 3. Metrics against a naive oracle.

struct OracleMetrics {
  double acc, mf1, kappa;
  std::array<double, 5> f1;
};

// Written from the textbook definitions over an expanded label list.
OracleMetrics metric_oracle(const eval::Confusion& c) {
  std::vector<int> t, p;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (std::uint64_t n = 0; n < c[i][j]; ++n) {
        t.push_back(i);
        p.push_back(j);
      }
  const double n = static_cast<double>(t.size());
  OracleMetrics m{};
  double agree = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) agree += t[i] == p[i];
  m.acc = agree / n;
  double mf1 = 0.0, present = 0.0, pe = 0.0;
  for (int k = 0; k < 5; ++k) {
    double tp = 0, fp = 0, fn = 0, nt = 0, np_ = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tp += t[i] == k && p[i] == k;
      fp += t[i] != k && p[i] == k;
      fn += t[i] == k && p[i] != k;
      nt += t[i] == k;
      np_ += p[i] == k;
    }
    m.f1[k] = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    if (nt + np_ > 0) {
      mf1 += m.f1[k];
      present += 1;
    }
    pe += (nt / n) * (np_ / n);
  }
  m.mf1 = mf1 / present;
  m.kappa = pe == 1.0 ? 1.0 : (m.acc - pe) / (1.0 - pe);
  return m;
}

Outcome criterion_metrics() {
  Rng rng(1000);
  std::uniform_int_distribution<int> cell(0, 30);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    eval::Confusion c{};
    for (auto& row : c)
      for (auto& v : row) v = static_cast<std::uint64_t>(cell(rng));
    const auto r = eval::metrics(c);
    const auto o = metric_oracle(c);
    worst = std::max({worst, std::abs(r.acc - o.acc), std::abs(r.mf1 - o.mf1),
                      std::abs(r.kappa - o.kappa)});
    for (int k = 0; k < 5; ++k) worst = std::max(worst, std::abs(r.per_class_f1[k] - o.f1[k]));
  }
  eval::Confusion k2{};
  k2[0][0] = 50, k2[0][1] = 10, k2[1][0] = 10, k2[1][1] = 30;
  const double kappa = eval::metrics(k2).kappa;
  eval::Confusion m2{};
  m2[0][0] = 2, m2[1][0] = 1, m2[1][1] = 1;
  const double mf1 = eval::metrics(m2).mf1;
  // 0.5833 = (0.8 - 0.52) / 0.48 = 7/12;  0.7333 = (0.8 + 2/3) / 2 = 11/15.
  const bool hand = std::abs(kappa - 7.0 / 12.0) <= 1e-12 && std::abs(mf1 - 11.0 / 15.0) <= 1e-12;
  return {worst <= 1e-12 && hand,
          "1000 random matrices max |diff| " + fmt("%.1e", worst) + " <= 1e-12; kappa " +
              fmt("%.4f", kappa) + ", MF1 " + fmt("%.4f", mf1)};
}

// ---------------------------------------------------------------------------
// 4. Ensemble vote and selection.

int brute_force_vote(const std::vector<std::vector<int>>& labels,
                     const std::vector<std::vector<clf::ClassProbabilities>>& probs,
                     std::size_t i) {
  std::array<int, 5> count{};
  for (const auto& m : labels) ++count[m[i]];
  const int top = *std::max_element(count.begin(), count.end());
  int best = -1;
  double best_p = -1.0;
  for (int k = 0; k < 5; ++k) {
    if (count[k] != top) continue;
    std::vector<double> ps;
    for (const auto& m : probs) ps.push_back(m[i][k]);
    std::sort(ps.begin(), ps.end());
    double s = 0.0;
    for (double v : ps) s += v;
    if (s > best_p) {
      best_p = s;
      best = k;
    }
  }
  return best;
}

Outcome criterion_ensemble() {
  Rng rng(404);
  std::uniform_int_distribution<int> label(0, 4);
  std::uniform_int_distribution<int> level(0, 3);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<int>> labels(10, std::vector<int>(100));
    std::vector<std::vector<clf::ClassProbabilities>> probs(10,
                                                            std::vector<clf::ClassProbabilities>(100));
    for (std::size_t m = 0; m < 10; ++m)
      for (std::size_t i = 0; i < 100; ++i) {
        labels[m][i] = label(rng);
        // Coarse levels make probability ties (and the index fallback) common.
        double tot = 0.0;
        for (auto& p : probs[m][i]) tot += (p = 1 + level(rng));
        for (auto& p : probs[m][i]) p /= tot;
      }
    const auto voted = eval::majority_vote(labels, probs);
    for (std::size_t i = 0; i < 100; ++i) mismatches += voted[i] != brute_force_vote(labels, probs, i);
  }
  std::vector<std::vector<int>> one{{3, 1, 4, 1, 0, 2}};
  std::vector<std::vector<clf::ClassProbabilities>> one_p(1, std::vector<clf::ClassProbabilities>(6));
  const bool identity = eval::majority_vote(one, one_p) == one[0];

  auto rec = [](std::int64_t e, double acc, double mf1) {
    clf::EpochRecord r;
    r.epoch = e;
    r.val_acc = acc;
    r.val_mf1 = mf1;
    return r;
  };
  const std::vector<clf::EpochRecord> bank{rec(0, 0.80, 0.7), rec(1, 0.90, 0.6), rec(2, 0.90, 0.8),
                                           rec(3, 0.85, 0.9), rec(4, 0.90, 0.8), rec(5, 0.70, 0.9)};
  // Hand ranking: acc desc, then MF1 desc, then later epoch first.
  const std::vector<std::int64_t> expected{4, 2, 1, 3, 0, 5};
  bool ranking = true;
  for (std::size_t m = 1; m <= bank.size(); ++m) {
    const auto top = eval::select_top_m(bank, m);
    for (std::size_t i = 0; i < m; ++i) ranking = ranking && top[i].epoch == expected[i];
  }
  return {mismatches == 0 && identity && ranking,
          std::to_string(mismatches) + " mismatches over 1000 (M=10, N=100) matrices; M=1 identity " +
              (identity ? "holds" : "broken") + "; hand-ranked bank with ties " +
              (ranking ? "reproduced" : "differs")};
}

// ---------------------------------------------------------------------------
// 5. Desk-scale learning.

struct LearningRep {
  double train_acc = 0.0;
  double single_acc = 0.0;
  double ensemble_acc = 0.0;
  double seconds = 0.0;
  eval::PredictionCache cache;
};

double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::vector<int> truth_of(std::span<const LabeledEpoch> epochs) {
  std::vector<int> t;
  for (const auto& e : epochs) t.push_back(stage_index(e.stage));
  return t;
}

LearningRep learning_rep(std::size_t rep) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = derive_seed(20260101, "acceptance-learning", rep);
  data::SpectralCorpusConfig corpus;
  corpus.subjects = 200;
  corpus.epochs_per_subject = 20;
  const auto epochs = data::normalize(data::make_spectral_corpus(corpus, seed));
  // 20 test subjects, 20 validation subjects, 160 training subjects.
  const auto plan = data::make_folds(data::subjects_of(epochs), 10, 20.0 / 180.0, seed);
  const auto& fold = plan.folds[0];
  auto train = data::select_subjects(epochs, fold.train);
  auto val = data::select_subjects(epochs, fold.validation);
  const auto test = data::select_subjects(epochs, fold.test);

  clf::ClassifierArchitecture arch;
  arch.epoch_length = 256;
  arch.sampling_rate = 64.0;
  arch.filters = {16, 16, 32};
  arch.hidden = 32;
  arch.dropout = 0.2;
  clf::ClfTrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 8;
  cfg.sequence_length = 20;
  cfg.train_epochs = 50;
  cfg.seed = derive_seed(seed, "classifier");
  clf::ClassifierTrainer trainer(arch, cfg);
  trainer.set_data(train, std::move(val));
  clf::CheckpointBank bank;
  trainer.train(bank);

  LearningRep out;
  const auto train_probs = clf::infer_probabilities(trainer.classifier(), train, 20);
  std::vector<int> train_pred;
  for (const auto& p : train_probs) train_pred.push_back(clf::argmax5(p));
  out.train_acc = accuracy(truth_of(train), train_pred);

  const auto top = eval::select_top_m(bank.records(), 10);
  out.cache = eval::build_prediction_cache(bank, top, test, 20);
  out.single_acc = accuracy(out.cache.truth, eval::ensemble_labels(out.cache, 1));
  out.ensemble_acc = accuracy(out.cache.truth, eval::ensemble_labels(out.cache, 10));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<LearningRep> run_learning(std::size_t reps, bool verbose) {
  std::vector<LearningRep> out;
  for (std::size_t r = 0; r < reps; ++r) {
    out.push_back(learning_rep(r));
    const auto& x = out.back();
    if (verbose) {
      std::printf("     rep %zu: train %.4f  single %.4f  ensemble %.4f  %.0f s\n", r, x.train_acc,
                  x.single_acc, x.ensemble_acc, x.seconds);
      std::fflush(stdout);
    }
  }
  return out;
}

Outcome criterion_learning() {
  const auto reps = run_learning(10, true);
  double min_train = 1.0, min_heldout = 1.0, max_seconds = 0.0;
  std::size_t wins = 0;
  g_learning_caches.clear();
  for (const auto& r : reps) {
    min_train = std::min(min_train, r.train_acc);
    min_heldout = std::min(min_heldout, r.single_acc);
    max_seconds = std::max(max_seconds, r.seconds);
    wins += r.ensemble_acc >= r.single_acc;
    g_learning_caches.push_back(r.cache);
  }
  const bool ok = min_train >= 0.99 && min_heldout >= 0.90 && wins >= 7 && max_seconds < 900.0;
  return {ok, "min train acc " + fmt("%.4f", min_train) + " >= 0.99 (50 epochs); min held-out " +
                  fmt("%.4f", min_heldout) + " >= 0.90; ensemble >= single in " +
                  std::to_string(wins) + "/10 >= 7; slowest rep " + fmt("%.0f", max_seconds) +
                  " s < 900 s"};
}

// ---------------------------------------------------------------------------
// 6. Desk-scale GAN fidelity.

Outcome criterion_gan() {
  const auto start = std::chrono::steady_clock::now();
  data::SinusoidConfig sc;
  sc.count = 512;
  const auto real = data::make_sinusoid_epochs(sc, 61);
  const auto held = data::make_sinusoid_epochs(sc, 62);

  gan::GanArchitecture arch;
  arch.noise_dim = 100;
  arch.epoch_length = 256;
  arch.sampling_rate = 64.0;
  arch.filters = {8, 8, 16, 16};
  arch.hidden = 16;
  gan::GanTrainConfig cfg;
  cfg.learning_rate = 2e-4;
  cfg.batch_size = 16;
  cfg.train_epochs = 100;
  cfg.seed = 1;
  cfg.real_label = 0.9;
  cfg.instance_noise = 0.5;
  cfg.instance_noise_final = 0.5;
  gan::GanTrainer trainer(arch, cfg);
  trainer.set_real(real);
  trainer.train(std::nullopt);

  const auto fake = gan::sample_minority(trainer.generator(), 512, Stage::kN1, 63);
  const auto diag = gan::compute_diagnostics(held, fake, arch.sampling_rate);
  const double gap = std::abs(diag.generated.dominant_mean_hz - diag.real.dominant_mean_hz);
  const double d_acc = gan::discriminator_accuracy(trainer.discriminator(), held, fake);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = gap <= 1.0 && d_acc >= 0.40 && d_acc <= 0.80 && seconds < 1200.0;
  return {ok, "dominant mean real " + fmt("%.2f", diag.real.dominant_mean_hz) + " Hz vs generated " +
                  fmt("%.2f", diag.generated.dominant_mean_hz) + " Hz (|diff| " +
                  fmt("%.2f", gap) + " <= 1); held-out D accuracy " + fmt("%.3f", d_acc) +
                  " in [0.40, 0.80]; " + fmt("%.0f", seconds) + " s < 1200 s"};
}

// ---------------------------------------------------------------------------
// 7. Rebalance arithmetic and leakage.

Outcome criterion_rebalance() {
  std::ostringstream os;
  bool ok = true;
  for (const auto& preset : {data::kSleepEdf20Preset, data::kShhsPreset}) {
    const auto plan = data::plan_rebalance(preset.before, preset.config);
    const auto after = data::apply_plan(preset.before, plan);
    const std::size_t total = std::accumulate(after.begin(), after.end(), std::size_t{0});
    os << preset.name << " N1 " << after[1] << " total " << total << "; ";
    if (preset.name == "sleep-edf-20") ok = ok && after[1] == 8120 && total == 49536;
    if (preset.name == "shhs") ok = ok && after[1] == 46272;
  }

  Rng rng(777);
  std::size_t plans = 0, leaks = 0, controls = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(6, 40)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(2, std::min<std::size_t>(n / 2, 10))(rng);
    const double vf = std::uniform_real_distribution<double>(0.05, 0.4)(rng);
    std::vector<LabeledEpoch> epochs;
    for (std::size_t s = 0; s < n; ++s) {
      for (std::int64_t i = 0; i < 12; ++i) {
        LabeledEpoch e;
        e.samples.assign(4, 0.0f);
        e.stage = stage_from_index(std::uniform_int_distribution<int>(0, 4)(rng));
        e.subject_id = "S" + std::to_string(s);
        e.recording_id = e.subject_id;
        e.index = i;
        epochs.push_back(std::move(e));
      }
    }
    const auto subjects = data::subjects_of(epochs);
    const auto plan = data::make_folds(subjects, k, vf, rng());
    data::check_fold_plan(plan, subjects);
    data::EpochSampler sampler = [](Stage stage, std::size_t count) {
      std::vector<LabeledEpoch> out(count);
      for (auto& e : out) {
        e.samples.assign(4, 0.5f);
        e.stage = stage;
        e.source = EpochSource::kGenerated;
        e.subject_id = "generated";
      }
      return out;
    };
    for (const auto& fold : plan.folds) {
      const auto train = data::rebalance(data::select_subjects(epochs, fold.train), sampler, {});
      const auto val = data::select_subjects(epochs, fold.validation);
      auto test = data::select_subjects(epochs, fold.test);
      try {
        data::check_split(train, val, test);
      } catch (const DataError&) {
        ++leaks;
      }
      // A generated epoch slipped into the test set must be caught.
      test.push_back(sampler(Stage::kN1, 1).front());
      try {
        data::check_split(train, val, test);
      } catch (const DataError&) {
        ++controls;
      }
      ++plans;
    }
  }
  ok = ok && leaks == 0 && controls == plans;
  os << "100 fuzzed plans (" << plans << " folds): " << leaks << " leaks, " << controls << "/"
     << plans << " injected leaks caught";
  return {ok, os.str()};
}

// ---------------------------------------------------------------------------
// 8. EDF parser.

Outcome criterion_edf() {
  Rng rng(88);
  std::size_t roundtrip_fail = 0;
  double affine_worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto file = testing::random_edf(rng);
    const auto bytes = edf::write_edf(file);
    const auto parsed = edf::parse_edf_file(bytes);
    if (!(parsed == file) || edf::write_edf(parsed) != bytes) ++roundtrip_fail;
    for (const auto& s : file.header.signals) {
      const double span = s.physical_max - s.physical_min;
      const double scale = std::max({1.0, std::abs(s.physical_min), std::abs(s.physical_max)});
      affine_worst = std::max(affine_worst,
                              std::abs(edf::calibrate(s, s.digital_min) - s.physical_min) / scale);
      affine_worst = std::max(affine_worst,
                              std::abs(edf::calibrate(s, s.digital_max) - s.physical_max) / scale);
      // Equal digital steps give equal physical steps.
      const double gain = span / (static_cast<double>(s.digital_max) - s.digital_min);
      for (std::int32_t d : {-32768, -1, 0, 1, 12345, 32767}) {
        const double step = edf::calibrate(s, d + 1) - edf::calibrate(s, d);
        affine_worst = std::max(affine_worst, std::abs(step - gain) / std::max(1.0, std::abs(gain)));
      }
    }
  }

  // Hand-counted segmentation fixtures: (fs, seconds, hypnogram) → epochs.
  struct Fixture {
    double fs;
    std::size_t seconds;
    std::string hyp;
    std::size_t expected;
  };
  const std::vector<Fixture> fixtures{
      {100, 90, "0,60,Sleep stage W\n60,30,Sleep stage 1\n", 3},
      {100, 95, "0,95,Sleep stage W\n", 3},
      {125, 60, "0,60,Sleep stage 2\n", 2},
      {10, 120, "0,30,W\n30,30,Movement time\n60,60,R\n", 3},
      {10, 300, "0,120,Sleep stage 2\n120,30,Sleep stage ?\n150,150,Sleep stage 4\n", 9},
      {10, 100, "0,200,Sleep stage 3\n", 3},
  };
  std::size_t count_fail = 0;
  for (const auto& f : fixtures) {
    edf::Recording r;
    r.meta.subject_id = "S";
    r.meta.sampling_rate = f.fs;
    r.meta.duration = static_cast<double>(f.seconds);
    r.meta.start = "01.01.00 00.00.00";
    r.samples.assign(static_cast<std::size_t>(f.fs * f.seconds), 0.0);
    const auto h = edf::parse_hypnogram(std::vector<std::uint8_t>(f.hyp.begin(), f.hyp.end()));
    if (edf::segment_epochs(r, h).size() != f.expected) ++count_fail;
  }
  const bool ok = roundtrip_fail == 0 && affine_worst <= 1e-9 && count_fail == 0;
  return {ok, std::to_string(50 - roundtrip_fail) + "/50 fuzzed round trips bit-exact; calibration affine to " +
                  fmt("%.1e", affine_worst) + "; " +
                  std::to_string(fixtures.size() - count_fail) + "/" +
                  std::to_string(fixtures.size()) + " hand-counted segmentations"};
}

// ---------------------------------------------------------------------------
// 9. M-sensitivity harness.

Outcome criterion_sweep() {
  if (g_learning_caches.empty()) {
    for (auto& r : run_learning(2, false)) g_learning_caches.push_back(std::move(r.cache));
  }
  const std::vector<std::size_t> sizes{5, 6, 7, 8, 9, 10};
  const auto rows = eval::sensitivity_sweep(g_learning_caches, sizes);
  const auto sim = eval::simulate_votes(g_learning_caches, 5, 10);
  const double spread = eval::sweep_spread(rows);
  bool shape = rows.size() == 6;
  for (std::size_t i = 0; i < rows.size(); ++i) shape = shape && rows[i].m == sizes[i];
  return {shape && spread <= sim.spread(),
          std::to_string(rows.size()) + " rows (M=5..10) over " +
              std::to_string(g_learning_caches.size()) + " cached runs; accuracy spread " +
              fmt("%.4f", spread) + " <= simulated spread " + fmt("%.4f", sim.spread()) + " over " +
              std::to_string(sim.subsets) + " member subsets"};
}

// ---------------------------------------------------------------------------
// 10. Determinism of every command.

std::map<std::string, std::vector<std::uint8_t>> tree(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  }
  return out;
}

Outcome criterion_determinism() {
  const fs::path root = fs::temp_directory_path() /
                        ("somnus-acceptance-" + std::to_string(std::random_device{}()));
  fs::create_directories(root);

  // EDF fixtures for ingest.
  for (int r = 0; r < 2; ++r) {
    auto psg = testing::single_channel_edf("EEG Fpz-Cz", 16, 240);
    psg.header.patient = "REC" + std::to_string(r) + " X";
    write_file(root / ("psg" + std::to_string(r) + ".edf"), edf::write_edf(psg));
  }
  write_text_file(root / "hyp.txt",
                  "0,60,Sleep stage W\n60,60,Sleep stage 2\n120,60,Sleep stage R\n180,60,Sleep stage 1\n");
  write_text_file(root / "recordings.tsv", "psg0.edf\thyp.txt\npsg1.edf\thyp.txt\n");

  const std::string config = R"(seed = 8
sequence_length = 10
k_folds = 2
val_fraction = 0.25
epoch_seconds = 30
[gan]
noise_dim = 8
filters = 2,2,4,4
hidden = 4
epochs = 2
batch_size = 2
diagnostics_count = 8
[clf]
filters = 4,4,8
hidden = 8
dropout = 0.2
lr = 0.003
epochs = 3
batch_size = 4
[ensemble]
m = 2
cache_members = 3
)";
  data::SpectralCorpusConfig corpus;
  corpus.subjects = 8;
  corpus.epochs_per_subject = 50;
  corpus.stage_share = {0.25, 0.12, 0.3, 0.13, 0.2};
  EpochStore store;
  store.sampling_rate = 64.0;
  store.epoch_seconds = 4.0;
  store.channel = "synthetic";
  store.epochs = data::normalize(data::make_spectral_corpus(corpus, 17));
  save_epoch_store(root / "store.segd", store);

  struct Step {
    std::string command;
    std::vector<std::pair<std::string, std::string>> sets;
    std::function<void(const cli::CommandContext&)> run;
  };
  const std::vector<Step> steps{
      {"synth", {}, [](const cli::CommandContext& c) { cli::cmd_synth(c, {4, 10, 64.0, 4.0}); }},
      {"ingest", {{"ingest.manifest", (root / "recordings.tsv").string()}}, cli::cmd_ingest},
      {"train-gan", {{"data.store", (root / "store.segd").string()}}, cli::cmd_train_gan},
      {"generate",
       {{"data.store", (root / "store.segd").string()},
        {"generate.checkpoint", (root / "train-gan-a" / "generator.segk").string()}},
       cli::cmd_generate},
      {"train-clf", {{"data.store", (root / "store.segd").string()}}, cli::cmd_train_clf},
      {"cv", {{"data.store", (root / "store.segd").string()}}, cli::cmd_cv},
      {"sweep-m",
       {{"sweep.cv_dir", (root / "cv-a").string()}, {"sweep.sizes", "1,2,3"}},
       cli::cmd_sweep_m},
  };
  std::ostringstream os;
  bool ok = true;
  std::size_t files = 0;
  for (const auto& step : steps) {
    for (const char* suffix : {"-a", "-b"}) {
      cli::CommandContext ctx;
      ctx.command = step.command;
      ctx.values.load_text(config, {}, "acceptance.conf");
      for (const auto& [k, v] : step.sets) ctx.values.set(k, v, "acceptance", {});
      ctx.out_dir = root / (step.command + suffix);
      ctx.jobs = suffix[1] == 'a' ? 1 : 2;
      step.run(ctx);
      cli::write_manifest(ctx);
    }
    const auto a = tree(root / (step.command + "-a"));
    const bool same = a == tree(root / (step.command + "-b"));
    files += a.size();
    ok = ok && same && !a.empty();
    if (!same) os << step.command << " differs; ";
  }

  // Interrupted at epoch 1 and resumed equals the uninterrupted run.
  cli::CommandContext part;
  part.command = "train-clf";
  part.values.load_text(config, {}, "acceptance.conf");
  part.values.set("data.store", (root / "store.segd").string(), "acceptance", {});
  part.out_dir = root / "train-clf-resumed";
  part.stop_after_epoch = 1;
  cli::cmd_train_clf(part);
  part.stop_after_epoch.reset();
  part.resume = true;
  cli::cmd_train_clf(part);
  cli::write_manifest(part);
  const bool resumed = tree(root / "train-clf-a") == tree(root / "train-clf-resumed");
  ok = ok && resumed;

  std::error_code ec;
  fs::remove_all(root, ec);
  os << steps.size() << " commands rerun: " << files
     << " files byte-identical (cv with 1 vs 2 workers); train-clf resume after epoch 1 "
     << (resumed ? "identical" : "differs");
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::kWarn);
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"gradient correctness", criterion_gradients},
      {"architecture shape contract", criterion_shapes},
      {"metric oracle equivalence", criterion_metrics},
      {"ensemble correctness", criterion_ensemble},
      {"desk-scale learning sanity", criterion_learning},
      {"desk-scale GAN fidelity", criterion_gan},
      {"rebalance arithmetic and leakage", criterion_rebalance},
      {"EDF parser", criterion_edf},
      {"M-sensitivity harness", criterion_sweep},
      {"determinism", criterion_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), s);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures;
}
