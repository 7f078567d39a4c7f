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

#include "somnus/gan/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <sstream>

#include "somnus/core/errors.hpp"

namespace somnus::gan {

namespace {

// FFTW planning is not thread-safe; plans are cached per length.
class FftCache {
 public:
  static FftCache& instance() {
    static FftCache cache;
    return cache;
  }

  std::vector<double> magnitudes(std::span<const double> signal) {
    const int n = static_cast<int>(signal.size());
    std::lock_guard lock(mutex_);
    auto& slot = plans_[n];
    if (!slot.plan) {
      slot.in = fftw_alloc_real(static_cast<std::size_t>(n));
      slot.out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
      slot.plan = fftw_plan_dft_r2c_1d(n, slot.in, slot.out, FFTW_ESTIMATE);
    }
    std::copy(signal.begin(), signal.end(), slot.in);
    fftw_execute(slot.plan);
    std::vector<double> mag(static_cast<std::size_t>(n / 2 + 1));
    for (std::size_t k = 0; k < mag.size(); ++k) {
      mag[k] = std::hypot(slot.out[k][0], slot.out[k][1]);
    }
    return mag;
  }

  ~FftCache() {
    for (auto& [n, slot] : plans_) {
      fftw_destroy_plan(slot.plan);
      fftw_free(slot.in);
      fftw_free(slot.out);
    }
  }

 private:
  struct Slot {
    fftw_plan plan = nullptr;
    double* in = nullptr;
    fftw_complex* out = nullptr;
  };
  std::mutex mutex_;
  std::map<int, Slot> plans_;
};

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_num(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("diagnostics line " + std::to_string(line) + ": bad number '" +
                    std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

void emit_summary(std::ostringstream& os, const char* set, const SetSummary& s,
                  double bin_width) {
  os << "summary\t" << set << "\tcount\t" << s.count << "\n";
  os << "summary\t" << set << "\tmean\t" << num(s.mean) << "\n";
  os << "summary\t" << set << "\tvariance\t" << num(s.variance) << "\n";
  os << "summary\t" << set << "\tenvelope_mean\t" << num(s.envelope_mean) << "\n";
  os << "summary\t" << set << "\tenvelope_std\t" << num(s.envelope_std) << "\n";
  os << "summary\t" << set << "\trms_mean\t" << num(s.rms_mean) << "\n";
  os << "summary\t" << set << "\tdominant_mean_hz\t" << num(s.dominant_mean_hz) << "\n";
  for (std::size_t b = 0; b < s.dominant_histogram.size(); ++b) {
    os << "hist\t" << set << "\t" << num(static_cast<double>(b) * bin_width) << "\t"
       << num(s.dominant_histogram[b]) << "\n";
  }
}

void emit_traces(std::ostringstream& os, const char* set,
                 const std::vector<std::vector<double>>& traces) {
  for (std::size_t k = 0; k < traces.size(); ++k) {
    os << "trace\t" << set << "\t" << k << "\t";
    for (std::size_t i = 0; i < traces[k].size(); ++i) {
      if (i) os << ",";
      os << num(traces[k][i]);
    }
    os << "\n";
  }
}

}  // namespace

double dominant_frequency(std::span<const double> signal, double sampling_rate) {
  if (signal.size() < 2) return 0.0;
  const std::vector<double> mag = FftCache::instance().magnitudes(signal);
  std::size_t best = 1;
  for (std::size_t k = 2; k < mag.size(); ++k) {
    if (mag[k] > mag[best]) best = k;
  }
  return static_cast<double>(best) * sampling_rate / static_cast<double>(signal.size());
}

double dominant_frequency(std::span<const float> signal, double sampling_rate) {
  std::vector<double> wide(signal.begin(), signal.end());
  return dominant_frequency(std::span<const double>(wide), sampling_rate);
}

SetSummary summarize(std::span<const LabeledEpoch> epochs, double sampling_rate,
                     double bin_width_hz) {
  if (!(bin_width_hz > 0.0)) throw ConfigError("histogram bin width must be positive");
  SetSummary s;
  s.count = epochs.size();
  const auto bins = static_cast<std::size_t>(std::ceil(sampling_rate / 2.0 / bin_width_hz)) + 1;
  s.dominant_histogram.assign(bins, 0.0);
  if (epochs.empty()) return s;
  double sum = 0.0, sum_sq = 0.0, env = 0.0, env_sq = 0.0, rms = 0.0, dom = 0.0;
  std::size_t n = 0;
  for (const auto& e : epochs) {
    double peak = 0.0, sq = 0.0;
    for (float v : e.samples) {
      sum += v;
      sum_sq += static_cast<double>(v) * v;
      sq += static_cast<double>(v) * v;
      peak = std::max(peak, std::abs(static_cast<double>(v)));
    }
    n += e.samples.size();
    env += peak;
    env_sq += peak * peak;
    rms += e.samples.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(e.samples.size()));
    const double f = dominant_frequency(std::span<const float>(e.samples), sampling_rate);
    dom += f;
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::floor(f / bin_width_hz)));
    s.dominant_histogram[bin] += 1.0;
  }
  const double count = static_cast<double>(epochs.size());
  s.mean = n ? sum / static_cast<double>(n) : 0.0;
  s.variance = n ? sum_sq / static_cast<double>(n) - s.mean * s.mean : 0.0;
  s.envelope_mean = env / count;
  s.envelope_std = std::sqrt(std::max(0.0, env_sq / count - s.envelope_mean * s.envelope_mean));
  s.rms_mean = rms / count;
  s.dominant_mean_hz = dom / count;
  for (double& h : s.dominant_histogram) h /= count;
  return s;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("histograms differ in bin count");
  double sp = 0.0, sq = 0.0;
  for (double v : p) sp += v;
  for (double v : q) sq += v;
  if (!(sp > 0.0) || !(sq > 0.0)) return 0.0;
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i] / sp, b = q[i] / sq, m = 0.5 * (a + b);
    if (a > 0.0) out += 0.5 * a * std::log2(a / m);
    if (b > 0.0) out += 0.5 * b * std::log2(b / m);
  }
  return std::max(0.0, out);
}

Diagnostics compute_diagnostics(std::span<const LabeledEpoch> real,
                                std::span<const LabeledEpoch> generated,
                                double sampling_rate, std::size_t traces,
                                double bin_width_hz) {
  if (real.empty() || generated.empty()) {
    throw DataError("diagnostics need non-empty real and generated sets");
  }
  Diagnostics d;
  d.sampling_rate = sampling_rate;
  d.bin_width_hz = bin_width_hz;
  d.real = summarize(real, sampling_rate, bin_width_hz);
  d.generated = summarize(generated, sampling_rate, bin_width_hz);
  d.js_divergence = js_divergence(d.real.dominant_histogram, d.generated.dominant_histogram);
  for (std::size_t k = 0; k < std::min(traces, real.size()); ++k) {
    d.real_traces.emplace_back(real[k].samples.begin(), real[k].samples.end());
  }
  for (std::size_t k = 0; k < std::min(traces, generated.size()); ++k) {
    d.generated_traces.emplace_back(generated[k].samples.begin(), generated[k].samples.end());
  }
  return d;
}

std::string format_diagnostics(const Diagnostics& d) {
  std::ostringstream os;
  os << "scalar\tsampling_rate\t" << num(d.sampling_rate) << "\n";
  os << "scalar\tbin_width_hz\t" << num(d.bin_width_hz) << "\n";
  os << "scalar\tjs_divergence\t" << num(d.js_divergence) << "\n";
  emit_summary(os, "real", d.real, d.bin_width_hz);
  emit_summary(os, "generated", d.generated, d.bin_width_hz);
  emit_traces(os, "real", d.real_traces);
  emit_traces(os, "generated", d.generated_traces);
  return os.str();
}

Diagnostics parse_diagnostics(std::string_view text) {
  Diagnostics d;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    auto bad = [&]() {
      return DataError("diagnostics line " + std::to_string(line_no) + " is malformed");
    };
    auto pick = [&](std::string_view set) -> SetSummary& {
      if (set == "real") return d.real;
      if (set == "generated") return d.generated;
      throw bad();
    };
    if (f[0] == "scalar" && f.size() == 3) {
      const double v = parse_num(f[2], line_no);
      if (f[1] == "sampling_rate") d.sampling_rate = v;
      else if (f[1] == "bin_width_hz") d.bin_width_hz = v;
      else if (f[1] == "js_divergence") d.js_divergence = v;
      else throw bad();
    } else if (f[0] == "summary" && f.size() == 4) {
      SetSummary& s = pick(f[1]);
      const double v = parse_num(f[3], line_no);
      if (f[2] == "count") s.count = static_cast<std::size_t>(v);
      else if (f[2] == "mean") s.mean = v;
      else if (f[2] == "variance") s.variance = v;
      else if (f[2] == "envelope_mean") s.envelope_mean = v;
      else if (f[2] == "envelope_std") s.envelope_std = v;
      else if (f[2] == "rms_mean") s.rms_mean = v;
      else if (f[2] == "dominant_mean_hz") s.dominant_mean_hz = v;
      else throw bad();
    } else if (f[0] == "hist" && f.size() == 4) {
      pick(f[1]).dominant_histogram.push_back(parse_num(f[3], line_no));
    } else if (f[0] == "trace" && f.size() == 4) {
      auto& traces = f[1] == "real" ? d.real_traces
                     : f[1] == "generated" ? d.generated_traces
                                           : throw bad();
      std::vector<double> values;
      if (!f[3].empty()) {
        for (auto v : split(f[3], ',')) values.push_back(parse_num(v, line_no));
      }
      traces.push_back(std::move(values));
    } else {
      throw bad();
    }
  }
  return d;
}

std::string format_traces(const Diagnostics& d) {
  std::ostringstream os;
  os << "t_sec";
  for (std::size_t k = 0; k < d.real_traces.size(); ++k) os << "\treal_" << k;
  for (std::size_t k = 0; k < d.generated_traces.size(); ++k) os << "\tgenerated_" << k;
  os << "\n";
  std::size_t len = 0;
  for (const auto& t : d.real_traces) len = std::max(len, t.size());
  for (const auto& t : d.generated_traces) len = std::max(len, t.size());
  for (std::size_t i = 0; i < len; ++i) {
    os << num(static_cast<double>(i) / d.sampling_rate);
    for (const auto* set : {&d.real_traces, &d.generated_traces}) {
      for (const auto& t : *set) os << "\t" << (i < t.size() ? num(t[i]) : "");
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace somnus::gan
