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

#include "somnus/edf/edf.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "somnus/core/log.hpp"

namespace somnus::edf {

namespace {

constexpr std::size_t kHeaderBlock = 256;

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
  return s;
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

class HeaderCursor {
 public:
  HeaderCursor(std::span<const std::uint8_t> bytes, std::size_t pos)
      : bytes_(bytes), pos_(pos) {}

  std::string text(std::size_t width) {
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), width);
    pos_ += width;
    return rtrim(std::move(s));
  }

  template <typename T>
  T integer(std::size_t width, const char* field) {
    const std::size_t at = pos_;
    std::string raw = text(width);
    std::string_view v = trim_view(raw);
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
      throw EdfError(EdfErrorCode::kBadField, at,
                     std::string(field) + " is not an integer: '" + raw + "'");
    }
    return out;
  }

  double real(std::size_t width, const char* field) {
    const std::size_t at = pos_;
    std::string raw = text(width);
    std::string_view v = trim_view(raw);
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() ||
        !std::isfinite(out)) {
      throw EdfError(EdfErrorCode::kBadField, at,
                     std::string(field) + " is not a number: '" + raw + "'");
    }
    return out;
  }

  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

void require_ascii(std::span<const std::uint8_t> bytes, std::size_t begin,
                   std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    if (bytes[i] < 32 || bytes[i] > 126) {
      throw EdfError(EdfErrorCode::kNonAscii, i,
                     "header byte " + std::to_string(bytes[i]) +
                         " is not printable ASCII");
    }
  }
}

// Fixed-width ASCII field for the writer.
void put_field(std::string& out, std::string_view value, std::size_t width,
               const char* field) {
  if (value.size() > width) {
    throw UsageError(std::string("EDF field ") + field + " '" +
                     std::string(value) + "' exceeds " + std::to_string(width) +
                     " characters");
  }
  for (char c : value) {
    if (static_cast<unsigned char>(c) < 32 || static_cast<unsigned char>(c) > 126) {
      throw UsageError(std::string("EDF field ") + field + " is not ASCII");
    }
  }
  out.append(value);
  out.append(width - value.size(), ' ');
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw UsageError("cannot format EDF number");
  return std::string(buf, ptr);
}

const SignalHeader* find_signal(const EdfHeader& header, std::string_view label,
                                std::size_t* index) {
  const std::string want = normalize_label(label);
  for (std::size_t i = 0; i < header.signals.size(); ++i) {
    if (normalize_label(header.signals[i].label) == want) {
      *index = i;
      return &header.signals[i];
    }
  }
  return nullptr;
}

std::string join_start(const EdfHeader& h) {
  return h.start_date + " " + h.start_time;
}

}  // namespace

std::string_view error_code_name(EdfErrorCode code) {
  switch (code) {
    case EdfErrorCode::kTruncated:
      return "truncated";
    case EdfErrorCode::kNonAscii:
      return "non-ascii-header";
    case EdfErrorCode::kMissingChannel:
      return "missing-channel";
    case EdfErrorCode::kZeroDigitalRange:
      return "zero-digital-range";
    case EdfErrorCode::kBadField:
      return "bad-field";
  }
  return "unknown";
}

EdfError::EdfError(EdfErrorCode code, std::size_t offset,
                   const std::string& detail)
    : DataError("EDF " + std::string(error_code_name(code)) + " at byte " +
                std::to_string(offset) + ": " + detail),
      code_(code),
      offset_(offset) {}

EdfFile parse_edf_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBlock) {
    throw EdfError(EdfErrorCode::kTruncated, bytes.size(),
                   "file shorter than the 256-byte global header");
  }
  require_ascii(bytes, 0, kHeaderBlock);
  EdfFile file;
  EdfHeader& h = file.header;
  HeaderCursor cur(bytes, 0);
  h.version = cur.text(8);
  h.patient = cur.text(80);
  h.recording = cur.text(80);
  h.start_date = cur.text(8);
  h.start_time = cur.text(8);
  const auto header_bytes = cur.integer<std::int64_t>(8, "header byte count");
  h.reserved = cur.text(44);
  h.num_records = cur.integer<std::int64_t>(8, "number of data records");
  h.record_duration = cur.real(8, "data record duration");
  const auto ns = cur.integer<std::int64_t>(4, "number of signals");
  if (ns < 0 || ns > 4096) {
    throw EdfError(EdfErrorCode::kBadField, 252,
                   "implausible signal count " + std::to_string(ns));
  }
  if (h.record_duration < 0.0) {
    throw EdfError(EdfErrorCode::kBadField, 244, "negative record duration");
  }
  if (h.num_records < -1) {
    throw EdfError(EdfErrorCode::kBadField, 236, "negative record count");
  }
  const std::size_t full_header = kHeaderBlock * (static_cast<std::size_t>(ns) + 1);
  if (header_bytes != static_cast<std::int64_t>(full_header)) {
    throw EdfError(EdfErrorCode::kBadField, 184,
                   "header byte count " + std::to_string(header_bytes) +
                       " disagrees with " + std::to_string(ns) + " signals");
  }
  if (bytes.size() < full_header) {
    throw EdfError(EdfErrorCode::kTruncated, bytes.size(),
                   "signal headers end at byte " + std::to_string(full_header));
  }
  require_ascii(bytes, kHeaderBlock, full_header);

  const auto n = static_cast<std::size_t>(ns);
  h.signals.resize(n);
  for (auto& s : h.signals) s.label = cur.text(16);
  for (auto& s : h.signals) s.transducer = cur.text(80);
  for (auto& s : h.signals) s.physical_dimension = cur.text(8);
  for (auto& s : h.signals) s.physical_min = cur.real(8, "physical minimum");
  for (auto& s : h.signals) s.physical_max = cur.real(8, "physical maximum");
  for (auto& s : h.signals) s.digital_min = cur.integer<std::int32_t>(8, "digital minimum");
  for (auto& s : h.signals) s.digital_max = cur.integer<std::int32_t>(8, "digital maximum");
  for (auto& s : h.signals) s.prefiltering = cur.text(80);
  for (auto& s : h.signals) {
    const std::size_t at = cur.pos();
    s.samples_per_record = cur.integer<std::int32_t>(8, "samples per record");
    if (s.samples_per_record < 0) {
      throw EdfError(EdfErrorCode::kBadField, at, "negative samples per record");
    }
  }
  for (auto& s : h.signals) s.reserved = cur.text(32);

  std::size_t record_bytes = 0;
  for (const auto& s : h.signals) {
    record_bytes += 2 * static_cast<std::size_t>(s.samples_per_record);
  }
  const std::size_t data_bytes = bytes.size() - full_header;
  std::size_t records = 0;
  if (record_bytes == 0) {
    if (h.num_records > 0 && n > 0) {
      throw EdfError(EdfErrorCode::kBadField, full_header,
                     "data records declared but every signal is empty");
    }
    records = 0;
  } else {
    const std::size_t available = data_bytes / record_bytes;
    if (h.num_records == -1) {
      records = available;
    } else {
      records = static_cast<std::size_t>(h.num_records);
      if (available < records) {
        throw EdfError(EdfErrorCode::kTruncated,
                       full_header + available * record_bytes,
                       "header declares " + std::to_string(records) +
                           " data records, file holds " +
                           std::to_string(available));
      }
    }
  }
  if (h.num_records == -1) h.num_records = static_cast<std::int64_t>(records);

  file.digital.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    file.digital[i].resize(records *
                           static_cast<std::size_t>(h.signals[i].samples_per_record));
  }
  const std::uint8_t* p = bytes.data() + full_header;
  for (std::size_t rec = 0; rec < records; ++rec) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto spr = static_cast<std::size_t>(h.signals[i].samples_per_record);
      std::int16_t* dst = file.digital[i].data() + rec * spr;
      for (std::size_t k = 0; k < spr; ++k, p += 2) {
        dst[k] = static_cast<std::int16_t>(
            static_cast<std::uint16_t>(p[0]) | (static_cast<std::uint16_t>(p[1]) << 8));
      }
    }
  }
  return file;
}

std::vector<std::uint8_t> write_edf(const EdfFile& file) {
  const EdfHeader& h = file.header;
  const std::size_t n = h.signals.size();
  if (file.digital.size() != n) {
    throw UsageError("EDF writer: digital payload count differs from signals");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto expect = static_cast<std::size_t>(h.num_records) *
                        static_cast<std::size_t>(h.signals[i].samples_per_record);
    if (file.digital[i].size() != expect) {
      throw UsageError("EDF writer: signal " + std::to_string(i) + " holds " +
                       std::to_string(file.digital[i].size()) +
                       " samples, header implies " + std::to_string(expect));
    }
  }
  std::string head;
  head.reserve(h.header_bytes());
  put_field(head, h.version, 8, "version");
  put_field(head, h.patient, 80, "patient");
  put_field(head, h.recording, 80, "recording");
  put_field(head, h.start_date, 8, "start date");
  put_field(head, h.start_time, 8, "start time");
  put_field(head, std::to_string(h.header_bytes()), 8, "header bytes");
  put_field(head, h.reserved, 44, "reserved");
  put_field(head, std::to_string(h.num_records), 8, "records");
  put_field(head, format_real(h.record_duration), 8, "duration");
  put_field(head, std::to_string(n), 4, "signals");
  for (const auto& s : h.signals) put_field(head, s.label, 16, "label");
  for (const auto& s : h.signals) put_field(head, s.transducer, 80, "transducer");
  for (const auto& s : h.signals) put_field(head, s.physical_dimension, 8, "dimension");
  for (const auto& s : h.signals) put_field(head, format_real(s.physical_min), 8, "physical min");
  for (const auto& s : h.signals) put_field(head, format_real(s.physical_max), 8, "physical max");
  for (const auto& s : h.signals) put_field(head, std::to_string(s.digital_min), 8, "digital min");
  for (const auto& s : h.signals) put_field(head, std::to_string(s.digital_max), 8, "digital max");
  for (const auto& s : h.signals) put_field(head, s.prefiltering, 80, "prefiltering");
  for (const auto& s : h.signals) put_field(head, std::to_string(s.samples_per_record), 8, "samples");
  for (const auto& s : h.signals) put_field(head, s.reserved, 32, "signal reserved");

  std::vector<std::uint8_t> out(head.begin(), head.end());
  for (std::int64_t rec = 0; rec < h.num_records; ++rec) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto spr = static_cast<std::size_t>(h.signals[i].samples_per_record);
      const std::int16_t* src =
          file.digital[i].data() + static_cast<std::size_t>(rec) * spr;
      for (std::size_t k = 0; k < spr; ++k) {
        const auto u = static_cast<std::uint16_t>(src[k]);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
      }
    }
  }
  return out;
}

double calibrate(const SignalHeader& signal, std::int32_t digital) {
  const double gain = (signal.physical_max - signal.physical_min) /
                      static_cast<double>(signal.digital_max - signal.digital_min);
  return signal.physical_min +
         static_cast<double>(digital - signal.digital_min) * gain;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  bool space = false;
  for (char c : trim_view(label)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

Recording parse_edf(std::span<const std::uint8_t> bytes,
                    std::string_view target_channel) {
  EdfFile file = parse_edf_file(bytes);
  std::size_t index = 0;
  const SignalHeader* signal = find_signal(file.header, target_channel, &index);
  if (!signal) {
    std::string available;
    for (const auto& s : file.header.signals) {
      if (!available.empty()) available += ", ";
      available += "'" + s.label + "'";
    }
    throw EdfError(EdfErrorCode::kMissingChannel, kHeaderBlock,
                   "channel '" + std::string(target_channel) +
                       "' not found; available: " + available);
  }
  const std::size_t label_offset = kHeaderBlock + 16 * index;
  if (signal->digital_max == signal->digital_min) {
    throw EdfError(EdfErrorCode::kZeroDigitalRange, label_offset,
                   "digital min equals digital max for '" + signal->label + "'");
  }
  if (!(file.header.record_duration > 0.0) || signal->samples_per_record == 0) {
    throw EdfError(EdfErrorCode::kBadField, label_offset,
                   "cannot derive a sampling rate for '" + signal->label + "'");
  }
  Recording rec;
  rec.meta.channel_label = signal->label;
  rec.meta.sampling_rate =
      static_cast<double>(signal->samples_per_record) / file.header.record_duration;
  rec.meta.duration =
      static_cast<double>(file.header.num_records) * file.header.record_duration;
  rec.meta.start = join_start(file.header);
  std::istringstream patient(file.header.patient);
  patient >> rec.meta.subject_id;
  if (rec.meta.subject_id.empty()) rec.meta.subject_id = "unknown";
  const auto& digital = file.digital[index];
  rec.samples.resize(digital.size());
  for (std::size_t i = 0; i < digital.size(); ++i) {
    rec.samples[i] = calibrate(*signal, digital[i]);
  }
  return rec;
}

std::vector<HypnogramInterval> parse_annotation_tals(
    std::span<const std::uint8_t> raw) {
  std::vector<HypnogramInterval> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] == 0) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < raw.size() && raw[end] != 0) ++end;
    std::string tal(reinterpret_cast<const char*>(raw.data() + i), end - i);
    const std::size_t tal_offset = i;
    i = end;

    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= tal.size(); ++k) {
      if (k == tal.size() || tal[k] == '\x14') {
        parts.push_back(tal.substr(start, k - start));
        start = k + 1;
      }
    }
    if (parts.empty()) continue;
    std::string timing = parts[0];
    std::string dur_text;
    if (auto pos = timing.find('\x15'); pos != std::string::npos) {
      dur_text = timing.substr(pos + 1);
      timing = timing.substr(0, pos);
    }
    if (timing.empty() || (timing[0] != '+' && timing[0] != '-')) {
      throw DataError("EDF+ annotation at offset " + std::to_string(tal_offset) +
                      " has no signed onset");
    }
    auto parse_num = [&](std::string_view text) {
      if (!text.empty() && text.front() == '+') text.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw DataError("EDF+ annotation at offset " + std::to_string(tal_offset) +
                        " has a malformed number '" + std::string(text) + "'");
      }
      return v;
    };
    const double onset = parse_num(timing);
    const double duration = dur_text.empty() ? 0.0 : parse_num(dur_text);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      if (parts[k].empty()) continue;
      out.push_back({onset, duration, parts[k]});
    }
  }
  return out;
}

EdfFile make_hypnogram_edf(std::span<const HypnogramInterval> intervals,
                           const std::string& start_date,
                           const std::string& start_time) {
  std::string raw = std::string("+0\x14\x14") + '\0';
  for (const auto& iv : intervals) {
    raw += "+" + format_real(iv.onset) + "\x15" + format_real(iv.duration) +
           "\x14" + iv.token + "\x14" + '\0';
  }
  if (raw.size() % 2) raw.push_back('\0');
  EdfFile file;
  file.header.version = "0";
  file.header.patient = "X X X X";
  file.header.recording = "Startdate X X X X";
  file.header.start_date = start_date;
  file.header.start_time = start_time;
  file.header.reserved = "EDF+C";
  file.header.num_records = 1;
  file.header.record_duration = 0.0;
  SignalHeader sig;
  sig.label = "EDF Annotations";
  sig.physical_min = -1;
  sig.physical_max = 1;
  sig.digital_min = -32768;
  sig.digital_max = 32767;
  sig.samples_per_record = static_cast<std::int32_t>(raw.size() / 2);
  file.header.signals.push_back(sig);
  std::vector<std::int16_t> words(raw.size() / 2);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto lo = static_cast<std::uint8_t>(raw[2 * i]);
    const auto hi = static_cast<std::uint8_t>(raw[2 * i + 1]);
    words[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
  }
  file.digital.push_back(std::move(words));
  return file;
}

Hypnogram parse_hypnogram(std::span<const std::uint8_t> bytes) {
  Hypnogram hyp;
  const bool looks_edf =
      bytes.size() >= kHeaderBlock &&
      std::memcmp(bytes.data(), "0       ", 8) == 0;
  if (looks_edf) {
    EdfFile file = parse_edf_file(bytes);
    std::size_t index = 0;
    if (!find_signal(file.header, "EDF Annotations", &index)) {
      throw EdfError(EdfErrorCode::kMissingChannel, kHeaderBlock,
                     "hypnogram EDF has no 'EDF Annotations' signal");
    }
    std::vector<std::uint8_t> raw;
    raw.reserve(file.digital[index].size() * 2);
    for (std::int16_t v : file.digital[index]) {
      const auto u = static_cast<std::uint16_t>(v);
      raw.push_back(static_cast<std::uint8_t>(u & 0xff));
      raw.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    hyp.intervals = parse_annotation_tals(raw);
    hyp.start = join_start(file.header);
  } else {
    std::string text(bytes.begin(), bytes.end());
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string_view v = trim_view(line);
      if (v.empty() || v.front() == '#') continue;
      auto next_field = [&](std::string_view& rest) {
        auto pos = rest.find_first_of(",\t");
        if (pos == std::string_view::npos) {
          throw DataError("hypnogram line " + std::to_string(line_no) +
                          ": expected onset,duration,token");
        }
        std::string_view field = trim_view(rest.substr(0, pos));
        rest.remove_prefix(pos + 1);
        return field;
      };
      std::string_view rest = v;
      const std::string_view onset_text = next_field(rest);
      const std::string_view dur_text = next_field(rest);
      std::string_view token = trim_view(rest);
      if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
        token = token.substr(1, token.size() - 2);
      }
      auto num = [&](std::string_view t) {
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
        if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
          throw DataError("hypnogram line " + std::to_string(line_no) +
                          ": malformed number '" + std::string(t) + "'");
        }
        return x;
      };
      hyp.intervals.push_back({num(onset_text), num(dur_text), std::string(token)});
    }
  }

  for (const auto& iv : hyp.intervals) {
    if (iv.duration < 0.0) {
      throw DataError("hypnogram interval at " + std::to_string(iv.onset) +
                      " s has negative duration");
    }
  }
  std::stable_sort(hyp.intervals.begin(), hyp.intervals.end(),
                   [](const auto& a, const auto& b) { return a.onset < b.onset; });
  for (std::size_t i = 1; i < hyp.intervals.size(); ++i) {
    const auto& prev = hyp.intervals[i - 1];
    if (prev.onset + prev.duration > hyp.intervals[i].onset + 1e-9) {
      throw DataError("hypnogram intervals overlap: [" +
                      std::to_string(prev.onset) + ", +" +
                      std::to_string(prev.duration) + ") and onset " +
                      std::to_string(hyp.intervals[i].onset));
    }
  }
  return hyp;
}

std::optional<Stage> map_stage(std::string_view token) {
  std::string t = lower(trim_view(token));
  constexpr std::string_view kPrefix = "sleep stage ";
  if (t.starts_with(kPrefix)) t = std::string(trim_view(std::string_view(t).substr(kPrefix.size())));
  if (t == "w" || t == "wake") return Stage::kW;
  if (t == "1" || t == "n1") return Stage::kN1;
  if (t == "2" || t == "n2") return Stage::kN2;
  if (t == "3" || t == "4" || t == "n3" || t == "n4") return Stage::kN3;
  if (t == "r" || t == "rem") return Stage::kREM;
  if (t == "?" || t == "movement time" || t == "movement" || t == "m" ||
      t == "mt" || t == "unknown" || t == "unscored") {
    return std::nullopt;
  }
  log::warn("unrecognized stage token '" + std::string(token) + "', excluding");
  return std::nullopt;
}

std::vector<LabeledEpoch> segment_epochs(const Recording& recording,
                                         const Hypnogram& hypnogram,
                                         const SegmentOptions& options) {
  const double fs = recording.meta.sampling_rate;
  const double exact = fs * options.epoch_seconds;
  const double rounded = std::round(exact);
  if (!(options.epoch_seconds > 0.0) || !(fs > 0.0) ||
      std::abs(exact - rounded) > 1e-9 || rounded < 1.0) {
    throw ConfigError("epoch of " + std::to_string(options.epoch_seconds) +
                      " s at " + std::to_string(fs) +
                      " Hz is not a whole number of samples");
  }
  const auto epoch_len = static_cast<std::size_t>(rounded);
  double offset = 0.0;
  if (hypnogram.start) {
    if (auto d = seconds_between(recording.meta.start, *hypnogram.start)) {
      offset = *d;
    }
  }
  const std::string recording_id =
      recording.meta.subject_id + " " + recording.meta.start;
  std::vector<LabeledEpoch> out;
  for (const auto& iv : hypnogram.intervals) {
    const auto count = static_cast<std::int64_t>(
        std::floor(iv.duration / options.epoch_seconds + 1e-9));
    if (count <= 0) continue;
    const std::optional<Stage> stage = map_stage(iv.token);
    if (!stage) continue;
    for (std::int64_t k = 0; k < count; ++k) {
      const double start_sec =
          iv.onset + offset + static_cast<double>(k) * options.epoch_seconds;
      if (start_sec < -1e-9) continue;
      const auto first = static_cast<std::int64_t>(std::llround(start_sec * fs));
      if (first < 0 ||
          static_cast<std::size_t>(first) + epoch_len > recording.samples.size()) {
        continue;
      }
      LabeledEpoch e;
      e.samples.assign(recording.samples.begin() + first,
                       recording.samples.begin() + first +
                           static_cast<std::ptrdiff_t>(epoch_len));
      e.stage = *stage;
      e.subject_id = recording.meta.subject_id;
      e.recording_id = recording_id;
      e.index = std::llround(start_sec / options.epoch_seconds);
      out.push_back(std::move(e));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

std::vector<LabeledEpoch> trim_wake(std::vector<LabeledEpoch> epochs,
                                    double max_minutes, double epoch_seconds) {
  auto first = std::find_if(epochs.begin(), epochs.end(),
                            [](const auto& e) { return e.stage != Stage::kW; });
  if (first == epochs.end()) return {};
  auto last = std::find_if(epochs.rbegin(), epochs.rend(),
                           [](const auto& e) { return e.stage != Stage::kW; });
  const auto window =
      static_cast<std::int64_t>(std::floor(max_minutes * 60.0 / epoch_seconds + 1e-9));
  const std::int64_t lo = first->index - window;
  const std::int64_t hi = last->index + window;
  std::vector<LabeledEpoch> out;
  out.reserve(epochs.size());
  for (auto& e : epochs) {
    if (e.index >= lo && e.index <= hi) out.push_back(std::move(e));
  }
  return out;
}

std::optional<double> seconds_between(std::string_view a, std::string_view b) {
  auto parse = [](std::string_view s) -> std::optional<std::int64_t> {
    int dd, mo, yy, hh, mi, ss;
    std::string text(s);
    if (std::sscanf(text.c_str(), "%d.%d.%d %d.%d.%d", &dd, &mo, &yy, &hh, &mi,
                    &ss) != 6) {
      return std::nullopt;
    }
    const int year = yy >= 85 ? 1900 + yy : 2000 + yy;
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year(year),
                             std::chrono::month(static_cast<unsigned>(mo)),
                             std::chrono::day(static_cast<unsigned>(dd))};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days(ymd).time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mi * 60 + ss;
  };
  auto ta = parse(a);
  auto tb = parse(b);
  if (!ta || !tb) return std::nullopt;
  return static_cast<double>(*tb - *ta);
}

}  // namespace somnus::edf
