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

// Randomized EDF fixtures shared by the unit tests and the acceptance suite.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "somnus/core/rng.hpp"
#include "somnus/edf/edf.hpp"

namespace somnus::testing {

inline std::string random_ascii(Rng& rng, std::size_t max_len) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_.:/ ";
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<std::size_t> ch(0, sizeof(kAlphabet) - 2);
  std::string s(len_dist(rng), ' ');
  for (char& c : s) c = kAlphabet[ch(rng)];
  // The format pads with spaces, so edges cannot carry meaningful blanks.
  while (!s.empty() && s.back() == ' ') s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  return s;
}

// Physical extrema are multiples of 1/4 so their shortest text form fits the
// 8-character field.
inline edf::EdfFile random_edf(Rng& rng) {
  std::uniform_int_distribution<int> ns_dist(1, 4);
  std::uniform_int_distribution<int> rec_dist(0, 8);
  std::uniform_int_distribution<int> spr_dist(1, 40);
  std::uniform_int_distribution<int> quarter(-9999, 9999);
  std::uniform_int_distribution<int> digital(-32768, 32767);
  std::uniform_int_distribution<int> day(1, 28), month(1, 12), year(0, 99);
  std::uniform_int_distribution<int> hour(0, 23), minute(0, 59);
  static constexpr double kDurations[] = {1.0, 30.0, 0.5, 2.0, 10.0};
  std::uniform_int_distribution<std::size_t> dur_dist(0, 4);

  auto two = [](int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
  };

  edf::EdfFile f;
  auto& h = f.header;
  h.version = "0";
  h.patient = random_ascii(rng, 80);
  h.recording = random_ascii(rng, 80);
  h.start_date = two(day(rng)) + "." + two(month(rng)) + "." + two(year(rng));
  h.start_time = two(hour(rng)) + "." + two(minute(rng)) + "." + two(minute(rng));
  h.reserved = random_ascii(rng, 44);
  h.num_records = rec_dist(rng);
  h.record_duration = kDurations[dur_dist(rng)];
  const int ns = ns_dist(rng);
  for (int i = 0; i < ns; ++i) {
    edf::SignalHeader s;
    s.label = random_ascii(rng, 16);
    s.transducer = random_ascii(rng, 80);
    s.physical_dimension = random_ascii(rng, 8);
    double a = quarter(rng) / 4.0, b = quarter(rng) / 4.0;
    if (a == b) b = a + 1.0;
    s.physical_min = std::min(a, b);
    s.physical_max = std::max(a, b);
    int da = digital(rng), db = digital(rng);
    if (da == db) db = da == 32767 ? da - 1 : da + 1;
    s.digital_min = std::min(da, db);
    s.digital_max = std::max(da, db);
    s.prefiltering = random_ascii(rng, 80);
    s.samples_per_record = spr_dist(rng);
    s.reserved = random_ascii(rng, 32);
    h.signals.push_back(s);
  }
  for (const auto& s : h.signals) {
    std::vector<std::int16_t> d(static_cast<std::size_t>(h.num_records) *
                                static_cast<std::size_t>(s.samples_per_record));
    for (auto& v : d) v = static_cast<std::int16_t>(digital(rng));
    f.digital.push_back(std::move(d));
  }
  return f;
}

// Single-signal recording at `spr` samples per 1 s record.
inline edf::EdfFile single_channel_edf(const std::string& label, int spr,
                                       int records, double pmin = -200.0,
                                       double pmax = 200.0,
                                       std::int32_t dmin = -2048,
                                       std::int32_t dmax = 2047) {
  edf::EdfFile f;
  f.header.version = "0";
  f.header.patient = "SUBJ01 M 01-JAN-1990";
  f.header.recording = "Startdate 01-JAN-2000 fixture";
  f.header.start_date = "01.01.00";
  f.header.start_time = "22.00.00";
  f.header.num_records = records;
  f.header.record_duration = 1.0;
  edf::SignalHeader s;
  s.label = label;
  s.physical_dimension = "uV";
  s.physical_min = pmin;
  s.physical_max = pmax;
  s.digital_min = dmin;
  s.digital_max = dmax;
  s.samples_per_record = spr;
  f.header.signals.push_back(s);
  std::vector<std::int16_t> d(static_cast<std::size_t>(spr * records));
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<std::int16_t>(static_cast<int>(i % 4096) - 2048);
  }
  f.digital.push_back(std::move(d));
  return f;
}

}  // namespace somnus::testing
