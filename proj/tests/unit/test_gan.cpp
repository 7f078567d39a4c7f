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

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "somnus/ad/checkpoint.hpp"
#include "somnus/ad/init.hpp"
#include "somnus/ad/ops.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/data/synthetic.hpp"
#include "somnus/gan/diagnostics.hpp"
#include "somnus/gan/egan.hpp"

using namespace somnus;
using namespace somnus::gan;
using ad::Tensor;

namespace {

GanArchitecture desk_gan() {
  GanArchitecture a;
  a.noise_dim = 16;
  a.epoch_length = 256;
  a.sampling_rate = 64.0;
  a.filters = {4, 4, 8, 8};
  a.hidden = 8;
  return a;
}

GanTrainConfig desk_train(std::size_t epochs = 3) {
  GanTrainConfig c;
  c.batch_size = 8;
  c.train_epochs = epochs;
  c.seed = 5;
  c.instance_noise = 0.3;
  c.instance_noise_final = 0.1;
  c.real_label = 0.9;
  return c;
}

std::vector<LabeledEpoch> sinusoids(std::size_t n, std::uint64_t seed) {
  data::SinusoidConfig cfg;
  cfg.count = n;
  return data::make_sinusoid_epochs(cfg, seed);
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

// Direct O(n^2) DFT scan, independent of the FFT library.
double naive_dominant(const std::vector<double>& x, double fs) {
  const std::size_t n = x.size();
  double best = -1.0;
  std::size_t best_k = 0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                           static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    const double mag = std::abs(acc);
    if (mag > best * (1.0 + 1e-9)) {
      best = mag;
      best_k = k;
    }
  }
  return static_cast<double>(best_k) * fs / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("gan architecture") {
  TEST_CASE("first block follows the sampling rate") {
    CHECK(sleep_edf_architecture().first_kernel() == 50);
    CHECK(sleep_edf_architecture().first_stride() == 6);
    CHECK(shhs_architecture().first_kernel() == 63);
    CHECK(shhs_architecture().first_stride() == 8);
    CHECK(desk_gan().first_kernel() == 32);
    CHECK(desk_gan().first_stride() == 4);
  }

  TEST_CASE("generator output shapes at corpus scale") {
    ad::NoGradGuard guard;
    Rng rng(1);
    for (const auto& arch : {sleep_edf_architecture(), shhs_architecture()}) {
      Generator g(arch, 3);
      const Tensor out = g.forward(ad::standard_normal({2, arch.noise_dim}, rng));
      REQUIRE(out.shape() == ad::Shape{2, arch.epoch_length});
      for (double v : out.data()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
      }
      Discriminator d(arch, 3);
      const Tensor p = d.forward(out);
      REQUIRE(p.shape() == ad::Shape{2});
      for (double v : p.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }

  TEST_CASE("wrong input shapes") {
    Generator g(desk_gan(), 1);
    Discriminator d(desk_gan(), 1);
    CHECK_THROWS_AS(g.forward(Tensor::zeros({2, 15})), ShapeError);
    CHECK_THROWS_AS(d.forward(Tensor::zeros({2, 255})), ShapeError);
  }

  TEST_CASE("discriminator passes finite gradients to its input") {
    Discriminator d(desk_gan(), 2);
    Rng rng(4);
    Tensor x = ad::standard_normal({3, 256}, rng);
    x.set_requires_grad(true);
    ad::sum(d.forward(x)).backward();
    REQUIRE(x.has_grad());
    double norm = 0.0;
    for (double g : x.grad()) {
      CHECK(std::isfinite(g));
      norm += g * g;
    }
    CHECK(norm > 0.0);
  }

  TEST_CASE("invalid configuration") {
    auto a = desk_gan();
    a.hidden = 0;
    CHECK_THROWS_AS(Generator(a, 0), ConfigError);
    auto c = desk_train();
    c.real_label = 0.4;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = desk_train();
    c.instance_noise = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = desk_train();
    c.batch_size = 0;
    CHECK_THROWS_AS(GanTrainer(desk_gan(), c), ConfigError);
  }
}

TEST_SUITE("gan training") {
  TEST_CASE("real data checks") {
    GanTrainer t(desk_gan(), desk_train());
    CHECK_THROWS_AS(t.set_real(sinusoids(15, 1)), DataError);
    auto loud = sinusoids(32, 1);
    loud[3].samples[7] = 1.5f;
    CHECK_THROWS_AS(t.set_real(loud), DataError);
    auto shortened = sinusoids(32, 1);
    shortened[0].samples.pop_back();
    CHECK_THROWS_AS(t.set_real(shortened), DataError);
    CHECK_THROWS_AS(t.train_epoch(0), UsageError);
  }

  TEST_CASE("each step updates only its own network") {
    GanTrainer t(desk_gan(), desk_train());
    const auto real = sinusoids(16, 1);
    std::vector<std::size_t> order(8);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(3);
    const auto g0 = t.generator().params().fingerprint();
    const auto d0 = t.discriminator().params().fingerprint();
    const auto r = t.d_step(stack_epochs(real, order), rng);
    CHECK(r.total == 16);
    CHECK(std::isfinite(r.loss));
    CHECK(t.generator().params().fingerprint() == g0);
    const auto d1 = t.discriminator().params().fingerprint();
    CHECK(d1 != d0);
    CHECK(std::isfinite(t.g_step(8, rng)));
    CHECK(t.discriminator().params().fingerprint() == d1);
    CHECK(t.generator().params().fingerprint() != g0);
  }

  TEST_CASE("seeded training is bit-reproducible") {
    const auto real = sinusoids(32, 2);
    GanTrainer a(desk_gan(), desk_train(2));
    GanTrainer b(desk_gan(), desk_train(2));
    a.set_real(real);
    b.set_real(real);
    a.train(std::nullopt);
    b.train(std::nullopt);
    CHECK(a.log().size() == 2);
    CHECK(ad::encode_checkpoint(a.checkpoint()) == ad::encode_checkpoint(b.checkpoint()));
  }

  TEST_CASE("resume matches an uninterrupted run") {
    const auto dir = std::filesystem::temp_directory_path() / "somnus-gan-resume";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto real = sinusoids(32, 2);
    GanTrainer straight(desk_gan(), desk_train(3));
    straight.set_real(real);
    straight.train(std::nullopt);
    {
      GanTrainer first(desk_gan(), desk_train(3));
      first.set_real(real);
      first.train(dir, 0);
      CHECK(first.log().size() == 1);
    }
    GanTrainer second(desk_gan(), desk_train(3));
    second.set_real(real);
    second.restore(ad::load_checkpoint(dir / "gan-resume.segk"));
    second.train(dir);
    CHECK(second.log() == straight.log());
    CHECK(ad::encode_checkpoint(second.checkpoint()) ==
          ad::encode_checkpoint(straight.checkpoint()));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("restore rejects mismatched runs") {
    GanTrainer a(desk_gan(), desk_train());
    auto c = desk_train();
    c.seed = 6;
    GanTrainer b(desk_gan(), c);
    CHECK_THROWS(b.restore(a.checkpoint()));
    auto arch = desk_gan();
    arch.hidden = 6;
    GanTrainer d(arch, desk_train());
    CHECK_THROWS(d.restore(a.checkpoint()));
    CHECK_THROWS_AS(a.restore(generator_checkpoint(a.generator(), Stage::kN1, 0, 5)),
                    DataError);
  }

  TEST_CASE("generator checkpoint round trip") {
    Generator g(desk_gan(), 8);
    const auto cp = generator_checkpoint(g, Stage::kN3, 4, 8);
    const auto back = load_generator(ad::decode_checkpoint(ad::encode_checkpoint(cp)));
    CHECK(back.stage == Stage::kN3);
    Rng r1(2), r2(2);
    ad::NoGradGuard guard;
    CHECK(values(back.generator.forward(ad::standard_normal({2, 16}, r1))) ==
          values(g.forward(ad::standard_normal({2, 16}, r2))));
  }

  TEST_CASE("minority sampling") {
    Generator g(desk_gan(), 8);
    const auto a = sample_minority(g, 70, Stage::kN1, 11, 16);
    const auto b = sample_minority(g, 70, Stage::kN1, 11, 16);
    REQUIRE(a.size() == 70);
    CHECK(a == b);
    CHECK(sample_minority(g, 70, Stage::kN1, 12, 16) != a);
    for (const auto& e : a) {
      CHECK(e.source == EpochSource::kGenerated);
      CHECK(e.stage == Stage::kN1);
      CHECK(e.samples.size() == 256);
      for (float v : e.samples) CHECK(std::abs(v) < 1.0f);
    }
    CHECK(sample_minority(g, 1, Stage::kREM, 11).size() == 1);
    CHECK(sample_minority(g, 0, Stage::kREM, 11).empty());
  }
}

TEST_SUITE("gan diagnostics") {
  TEST_CASE("dominant frequency agrees with a direct DFT") {
    Rng rng = make_rng(3, "dft");
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = trial % 2 ? 256 : 100;
      std::vector<double> x(n);
      for (auto& v : x) v = noise(rng);
      CHECK(dominant_frequency(x, 64.0) == doctest::Approx(naive_dominant(x, 64.0)));
    }
    std::vector<double> sine(256);
    for (std::size_t t = 0; t < 256; ++t) {
      sine[t] = std::sin(2.0 * std::numbers::pi * 4.0 * static_cast<double>(t) / 64.0);
    }
    CHECK(dominant_frequency(sine, 64.0) == 4.0);
    CHECK(dominant_frequency(std::vector<double>{1.0}, 64.0) == 0.0);
  }

  TEST_CASE("identical sets have zero divergence") {
    const auto real = sinusoids(40, 1);
    const auto d = compute_diagnostics(real, real, 64.0);
    CHECK(d.js_divergence == 0.0);
    CHECK(d.real == d.generated);
    CHECK(std::abs(d.real.dominant_mean_hz - 4.0) < 0.5);
  }

  TEST_CASE("noise and sinusoids are far apart") {
    const auto real = sinusoids(40, 1);
    auto noise = real;
    Rng rng(7);
    std::uniform_real_distribution<float> u(-0.9f, 0.9f);
    for (auto& e : noise) {
      for (auto& v : e.samples) v = u(rng);
    }
    const auto d = compute_diagnostics(real, noise, 64.0);
    CHECK(d.js_divergence > 0.5);
    CHECK(d.js_divergence <= 1.0);
    CHECK(d.generated.dominant_mean_hz > 8.0);
  }

  TEST_CASE("divergence definition") {
    CHECK(js_divergence(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0);
    CHECK(js_divergence(std::vector<double>{2, 2}, std::vector<double>{1, 1}) == 0.0);
  }

  TEST_CASE("text form round trips") {
    const auto real = sinusoids(12, 1);
    const auto fake = sinusoids(12, 9);
    const auto d = compute_diagnostics(real, fake, 64.0, 3);
    CHECK(parse_diagnostics(format_diagnostics(d)) == d);
    const std::string traces = format_traces(d);
    CHECK(traces.rfind("t_sec\treal_0", 0) == 0);
    CHECK(std::count(traces.begin(), traces.end(), '\n') == 257);
  }

  TEST_CASE("empty sets are rejected") {
    const auto real = sinusoids(4, 1);
    CHECK_THROWS_AS(compute_diagnostics(real, {}, 64.0), DataError);
  }
}
