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

// Python bindings: somnus._core.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "somnus/ad/checkpoint.hpp"
#include "somnus/clf/classifier.hpp"
#include "somnus/core/errors.hpp"
#include "somnus/core/rng.hpp"
#include "somnus/data/epoch.hpp"
#include "somnus/data/pipeline.hpp"
#include "somnus/data/synthetic.hpp"
#include "somnus/edf/edf.hpp"
#include "somnus/eval/ensemble.hpp"
#include "somnus/eval/metrics.hpp"
#include "somnus/gan/diagnostics.hpp"
#include "somnus/gan/egan.hpp"

namespace py = pybind11;
using namespace somnus;

namespace {

std::span<const std::uint8_t> as_span(const py::bytes& b) {
  const std::string_view v(b);
  return {reinterpret_cast<const std::uint8_t*>(v.data()), v.size()};
}

py::dict report_dict(const eval::MetricsReport& r) {
  py::dict d;
  d["acc"] = r.acc;
  d["mf1"] = r.mf1;
  d["kappa"] = r.kappa;
  d["per_class_f1"] = std::vector<double>(r.per_class_f1.begin(), r.per_class_f1.end());
  py::array_t<std::uint64_t> confusion({kNumStages, kNumStages});
  auto c = confusion.mutable_unchecked<2>();
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) c(i, j) = r.confusion[i][j];
  }
  d["confusion"] = confusion;
  d["total"] = r.total;
  return d;
}

// Epochs as a dict of arrays: samples [N, E] float32, stages [N] uint8,
// generated [N] bool, subjects and recordings as lists.
py::dict epochs_dict(const std::vector<LabeledEpoch>& epochs, double sampling_rate) {
  const std::size_t n = epochs.size();
  const std::size_t len = n ? epochs.front().samples.size() : 0;
  py::array_t<float> samples({n, len});
  py::array_t<std::uint8_t> stages(n);
  py::array_t<bool> generated(n);
  auto s = samples.mutable_unchecked<2>();
  auto st = stages.mutable_unchecked<1>();
  auto g = generated.mutable_unchecked<1>();
  py::list subjects, recordings;
  for (std::size_t i = 0; i < n; ++i) {
    if (epochs[i].samples.size() != len) throw DataError("epochs differ in length");
    for (std::size_t t = 0; t < len; ++t) s(i, t) = epochs[i].samples[t];
    st(i) = static_cast<std::uint8_t>(epochs[i].stage);
    g(i) = epochs[i].source == EpochSource::kGenerated;
    subjects.append(epochs[i].subject_id);
    recordings.append(epochs[i].recording_id);
  }
  py::dict d;
  d["sampling_rate"] = sampling_rate;
  d["samples"] = samples;
  d["stages"] = stages;
  d["generated"] = generated;
  d["subjects"] = subjects;
  d["recordings"] = recordings;
  return d;
}

std::vector<LabeledEpoch> epochs_from_arrays(py::array_t<float, py::array::c_style |
                                                                   py::array::forcecast> samples,
                                             std::vector<std::string> subjects) {
  if (samples.ndim() != 2) throw ShapeError("samples must be a 2-D array");
  const auto n = static_cast<std::size_t>(samples.shape(0));
  const auto len = static_cast<std::size_t>(samples.shape(1));
  if (subjects.size() != n) throw ShapeError("need one subject id per epoch");
  auto s = samples.unchecked<2>();
  std::vector<LabeledEpoch> out(n);
  std::vector<std::int64_t> position;
  for (std::size_t i = 0; i < n; ++i) {
    out[i].samples.resize(len);
    for (std::size_t t = 0; t < len; ++t) out[i].samples[t] = s(i, t);
    out[i].subject_id = subjects[i];
    out[i].recording_id = subjects[i];
  }
  // Consecutive epochs of one subject form one stream.
  for (std::size_t i = 0; i < n; ++i) {
    out[i].index = (i > 0 && subjects[i] == subjects[i - 1]) ? out[i - 1].index + 1 : 0;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sleep staging toolkit: EDF reading, metrics, ensembles and trained models.";

  auto base = py::register_exception<Error>(m, "SomnusError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());

  m.attr("STAGES") = py::make_tuple("W", "N1", "N2", "N3", "REM");

  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("tag"), py::arg("index") = 0,
        "Seed of a named random stream derived from a root seed.");

  m.def(
      "metrics",
      [](const std::vector<int>& truth, const std::vector<int>& pred) {
        return report_dict(eval::metrics(truth, pred));
      },
      py::arg("truth"), py::arg("pred"),
      "Accuracy, macro F1, Cohen's kappa, per-class F1 and the confusion matrix.");
  m.def(
      "metrics_from_confusion",
      [](py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> c) {
        if (c.ndim() != 2 || c.shape(0) != 5 || c.shape(1) != 5) {
          throw ShapeError("confusion matrix must be 5x5");
        }
        eval::Confusion conf{};
        auto v = c.unchecked<2>();
        for (std::size_t i = 0; i < kNumStages; ++i) {
          for (std::size_t j = 0; j < kNumStages; ++j) conf[i][j] = v(i, j);
        }
        return report_dict(eval::metrics(conf));
      },
      py::arg("confusion"));

  m.def(
      "majority_vote",
      [](const std::vector<std::vector<int>>& labels,
         const std::vector<std::vector<std::array<double, 5>>>& probs) {
        return eval::majority_vote(labels, probs);
      },
      py::arg("labels"), py::arg("probs"),
      "Per-sample majority label of M members; ties go to the highest mean "
      "probability, then the lowest stage index.");

  py::class_<clf::EpochRecord>(m, "EpochRecord")
      .def(py::init([](std::int64_t epoch, double val_acc, double val_mf1) {
             clf::EpochRecord r;
             r.epoch = epoch;
             r.val_acc = val_acc;
             r.val_mf1 = val_mf1;
             return r;
           }),
           py::arg("epoch"), py::arg("val_acc"), py::arg("val_mf1") = 0.0)
      .def_readwrite("epoch", &clf::EpochRecord::epoch)
      .def_readwrite("val_acc", &clf::EpochRecord::val_acc)
      .def_readwrite("val_mf1", &clf::EpochRecord::val_mf1)
      .def_readwrite("train_loss", &clf::EpochRecord::train_loss)
      .def_readwrite("train_acc", &clf::EpochRecord::train_acc)
      .def_readwrite("file", &clf::EpochRecord::file)
      .def("__repr__", [](const clf::EpochRecord& r) {
        return "EpochRecord(epoch=" + std::to_string(r.epoch) +
               ", val_acc=" + std::to_string(r.val_acc) + ")";
      });
  m.def(
      "select_top_m",
      [](const std::vector<clf::EpochRecord>& records, std::size_t m) {
        return eval::select_top_m(records, m);
      },
      py::arg("records"), py::arg("m"));

  m.def(
      "plan_rebalance",
      [](std::array<std::size_t, 5> counts, const std::string& policy, std::size_t target) {
        data::RebalanceConfig cfg{data::parse_rebalance_policy(policy), target};
        const auto plan = data::plan_rebalance(counts, cfg);
        py::dict d;
        d["minority"] = std::string(stage_name(plan.minority));
        d["current"] = plan.current;
        d["target"] = plan.target;
        d["to_generate"] = plan.to_generate;
        d["after"] = data::apply_plan(counts, plan);
        return d;
      },
      py::arg("counts"), py::arg("policy") = "second_smallest", py::arg("target_count") = 0);

  m.def(
      "read_edf",
      [](const py::bytes& data, const std::string& channel) {
        const auto rec = edf::parse_edf(as_span(data), channel);
        py::dict d;
        d["subject_id"] = rec.meta.subject_id;
        d["channel"] = rec.meta.channel_label;
        d["sampling_rate"] = rec.meta.sampling_rate;
        d["duration"] = rec.meta.duration;
        d["start"] = rec.meta.start;
        d["samples"] = py::array_t<double>(rec.samples.size(), rec.samples.data());
        return d;
      },
      py::arg("data"), py::arg("channel"),
      "Decodes one channel of an EDF/EDF+ file given as bytes, in physical units.");
  m.def(
      "read_hypnogram",
      [](const py::bytes& data) {
        const auto h = edf::parse_hypnogram(as_span(data));
        py::list out;
        for (const auto& iv : h.intervals) out.append(py::make_tuple(iv.onset, iv.duration, iv.token));
        return out;
      },
      py::arg("data"), "(onset, duration, token) triples from EDF+ annotations or text.");

  m.def(
      "load_epoch_store",
      [](const std::filesystem::path& path) {
        const auto store = load_epoch_store(path);
        py::dict d = epochs_dict(store.epochs, store.sampling_rate);
        d["epoch_seconds"] = store.epoch_seconds;
        d["channel"] = store.channel;
        return d;
      },
      py::arg("path"));

  m.def(
      "spectral_corpus",
      [](std::size_t subjects, std::size_t epochs_per_subject, std::uint64_t seed,
         double sampling_rate, double epoch_seconds) {
        data::SpectralCorpusConfig cfg;
        cfg.subjects = subjects;
        cfg.epochs_per_subject = epochs_per_subject;
        cfg.sampling_rate = sampling_rate;
        cfg.epoch_seconds = epoch_seconds;
        return epochs_dict(data::normalize(data::make_spectral_corpus(cfg, seed)), sampling_rate);
      },
      py::arg("subjects") = 20, py::arg("epochs_per_subject") = 100, py::arg("seed") = 0,
      py::arg("sampling_rate") = 64.0, py::arg("epoch_seconds") = 4.0,
      "Normalized synthetic corpus where each stage is a sinusoid of its own frequency.");

  m.def(
      "dominant_frequency",
      [](const std::vector<double>& signal, double fs) {
        return gan::dominant_frequency(std::span<const double>(signal), fs);
      },
      py::arg("signal"), py::arg("sampling_rate"));

  m.def(
      "sample_generator",
      [](const std::filesystem::path& checkpoint, std::size_t n, std::uint64_t seed) {
        auto loaded = gan::load_generator(ad::load_checkpoint(checkpoint));
        std::vector<LabeledEpoch> epochs;
        {
          py::gil_scoped_release release;
          epochs = gan::sample_minority(loaded.generator, n, loaded.stage, seed);
        }
        return epochs_dict(epochs, loaded.generator.architecture().sampling_rate);
      },
      py::arg("checkpoint"), py::arg("n"), py::arg("seed") = 0,
      "Draws n epochs from a saved generator checkpoint.");

  m.def(
      "classify",
      [](const std::filesystem::path& checkpoint,
         py::array_t<float, py::array::c_style | py::array::forcecast> samples,
         std::vector<std::string> subjects, std::size_t sequence_length) {
        const auto classifier = clf::load_classifier(ad::load_checkpoint(checkpoint));
        const auto epochs = epochs_from_arrays(samples, std::move(subjects));
        if (!epochs.empty() &&
            epochs.front().samples.size() != classifier.architecture().epoch_length) {
          throw ShapeError("epochs have " + std::to_string(epochs.front().samples.size()) +
                           " samples, the classifier expects " +
                           std::to_string(classifier.architecture().epoch_length));
        }
        std::vector<clf::ClassProbabilities> probs;
        {
          py::gil_scoped_release release;
          probs = clf::infer_probabilities(classifier, epochs, sequence_length);
        }
        py::array_t<double> out({probs.size(), kNumStages});
        auto o = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < probs.size(); ++i) {
          for (std::size_t k = 0; k < kNumStages; ++k) o(i, k) = probs[i][k];
        }
        return out;
      },
      py::arg("checkpoint"), py::arg("samples"), py::arg("subjects"),
      py::arg("sequence_length") = 20,
      "Stage probabilities [N, 5] from a classifier checkpoint; consecutive "
      "epochs of one subject are scored as one stream.");
}
