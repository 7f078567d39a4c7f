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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "somnus/core/errors.hpp"
#include "somnus/core/stage.hpp"
#include "somnus/data/epoch.hpp"

namespace somnus::edf {

enum class EdfErrorCode {
  kTruncated,
  kNonAscii,
  kMissingChannel,
  kZeroDigitalRange,
  kBadField,
};

std::string_view error_code_name(EdfErrorCode code);

class EdfError : public DataError {
 public:
  EdfError(EdfErrorCode code, std::size_t offset, const std::string& detail);
  EdfErrorCode code() const noexcept { return code_; }
  // Byte offset into the file where the problem was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  EdfErrorCode code_;
  std::size_t offset_;
};

struct SignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  std::int32_t digital_min = -32768;
  std::int32_t digital_max = 32767;
  std::string prefiltering;
  std::int32_t samples_per_record = 0;
  std::string reserved;

  bool operator==(const SignalHeader&) const = default;
};

struct EdfHeader {
  std::string version = "0";
  std::string patient;
  std::string recording;
  std::string start_date = "01.01.00";  // dd.mm.yy
  std::string start_time = "00.00.00";  // hh.mm.ss
  std::string reserved;                 // "EDF+C" / "EDF+D" for EDF+
  std::int64_t num_records = 0;
  double record_duration = 1.0;  // seconds
  std::vector<SignalHeader> signals;

  std::size_t header_bytes() const { return 256 * (signals.size() + 1); }
  bool operator==(const EdfHeader&) const = default;
};

// Decoded file: header plus the digital samples of every signal,
// concatenated across data records.
struct EdfFile {
  EdfHeader header;
  std::vector<std::vector<std::int16_t>> digital;

  bool operator==(const EdfFile&) const = default;
};

EdfFile parse_edf_file(std::span<const std::uint8_t> bytes);

// Fixture writer, the inverse of parse_edf_file. Throws UsageError when a
// field does not fit its fixed-width ASCII slot.
std::vector<std::uint8_t> write_edf(const EdfFile& file);

// Linear map from the digital range onto the physical range.
double calibrate(const SignalHeader& signal, std::int32_t digital);

struct RecordingMeta {
  std::string subject_id;
  std::string channel_label;
  double sampling_rate = 0.0;
  double duration = 0.0;  // seconds
  std::string start;      // "dd.mm.yy hh.mm.ss" as stored in the header

  bool operator==(const RecordingMeta&) const = default;
};

struct Recording {
  RecordingMeta meta;
  std::vector<double> samples;  // physical units
};

// Label comparison ignores case and collapses runs of whitespace.
std::string normalize_label(std::string_view label);

// Materializes only `target_channel`. The subject id defaults to the first
// token of the patient field.
Recording parse_edf(std::span<const std::uint8_t> bytes,
                    std::string_view target_channel);

struct HypnogramInterval {
  double onset = 0.0;     // seconds from recording start
  double duration = 0.0;  // seconds
  std::string token;

  bool operator==(const HypnogramInterval&) const = default;
};

struct Hypnogram {
  std::vector<HypnogramInterval> intervals;
  std::optional<std::string> start;  // present when read from EDF+
};

// Accepts an EDF+ file with an "EDF Annotations" signal, or plain text with
// one "onset,duration,token" triple per line (tab also separates fields;
// '#' starts a comment). Output is onset-sorted; overlaps and negative
// durations are DataErrors.
Hypnogram parse_hypnogram(std::span<const std::uint8_t> bytes);

// Fixture writer for the inverse direction: a single-record EDF+ file whose
// only signal is "EDF Annotations", holding one TAL per interval.
EdfFile make_hypnogram_edf(std::span<const HypnogramInterval> intervals,
                           const std::string& start_date,
                           const std::string& start_time);

// Annotation TALs of an EDF+ annotation signal, already concatenated.
std::vector<HypnogramInterval> parse_annotation_tals(std::span<const std::uint8_t> raw);

// R&K or AASM token → stage; nullopt means the epoch is excluded
// (movement, unknown, unscored, or an unrecognized token).
std::optional<Stage> map_stage(std::string_view token);

struct SegmentOptions {
  double epoch_seconds = 30.0;
};

std::vector<LabeledEpoch> segment_epochs(const Recording& recording,
                                         const Hypnogram& hypnogram,
                                         const SegmentOptions& options = {});

// Keeps at most `max_minutes` of W epochs before the first and after the
// last non-W epoch. Input must be one recording in index order.
std::vector<LabeledEpoch> trim_wake(std::vector<LabeledEpoch> epochs,
                                    double max_minutes, double epoch_seconds);

// Seconds from EDF start `a` to `b`, both "dd.mm.yy hh.mm.ss".
std::optional<double> seconds_between(std::string_view a, std::string_view b);

}  // namespace somnus::edf
