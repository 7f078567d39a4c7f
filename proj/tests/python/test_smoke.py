# Copyright 2026 The Somnus Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the somnus Python module."""

import os
import shutil
import struct
import subprocess

import numpy as np
import pytest

import somnus


def _field(text, width):
    return text.ljust(width)[:width].encode("ascii")


def _edf_bytes(label, samples, spr, pmin=-100.0, pmax=100.0, dmin=-2048, dmax=2047):
    """Minimal single-signal EDF written without the library."""
    records = len(samples) // spr
    head = b"".join([
        _field("0", 8), _field("PY01 F", 80), _field("Startdate X", 80),
        _field("01.02.03", 8), _field("23.10.00", 8), _field("512", 8),
        _field("", 44), _field(str(records), 8), _field("1", 8), _field("1", 4),
    ])
    sig = b"".join([
        _field(label, 16), _field("", 80), _field("uV", 8), _field(f"{pmin:g}", 8),
        _field(f"{pmax:g}", 8), _field(str(dmin), 8), _field(str(dmax), 8),
        _field("", 80), _field(str(spr), 8), _field("", 32),
    ])
    body = struct.pack(f"<{len(samples)}h", *samples)
    return head + sig + body


def test_stage_names_and_seed_derivation():
    assert somnus.STAGES == ("W", "N1", "N2", "N3", "REM")
    assert somnus.derive_seed(1, "gan") == somnus.derive_seed(1, "gan")
    assert somnus.derive_seed(1, "gan") != somnus.derive_seed(1, "classifier")


def test_metrics_agree_with_closed_forms():
    truth = [0] * 60 + [1] * 40
    pred = [0] * 50 + [1] * 10 + [0] * 10 + [1] * 30
    r = somnus.metrics(truth, pred)
    p_o = 0.8
    p_e = (60 * 60 + 40 * 40) / 100.0 ** 2
    assert r["acc"] == pytest.approx(p_o, abs=1e-12)
    assert r["kappa"] == pytest.approx((p_o - p_e) / (1 - p_e), abs=1e-12)
    assert r["confusion"].shape == (5, 5)
    assert int(r["confusion"][0, 1]) == 10

    c = np.zeros((5, 5), dtype=np.uint64)
    c[0, 0], c[1, 0], c[1, 1] = 2, 1, 1
    f1_w = 2 * (2 / 3) * 1 / (2 / 3 + 1)
    f1_n1 = 2 * 1 * 0.5 / 1.5
    assert somnus.metrics_from_confusion(c)["mf1"] == pytest.approx((f1_w + f1_n1) / 2, abs=1e-12)

    with pytest.raises(somnus.DataError):
        somnus.metrics([0, 7], [0, 1])
    with pytest.raises(somnus.SomnusError):
        somnus.metrics_from_confusion(np.zeros((5, 5), dtype=np.uint64))


def test_vote_and_selection():
    labels = [[0, 1, 2], [0, 2, 2], [1, 1, 3]]
    probs = [[[0.2] * 5] * 3] * 3
    assert somnus.majority_vote(labels, probs) == [0, 1, 2]

    records = [somnus.EpochRecord(e, acc) for e, acc in enumerate([0.5, 0.9, 0.9, 0.7])]
    top = somnus.select_top_m(records, 2)
    assert [r.epoch for r in top] == [2, 1]
    with pytest.raises(somnus.ConfigError):
        somnus.select_top_m(records, 0)


def test_rebalance_reproduces_published_counts():
    plan = somnus.plan_rebalance([10197, 2804, 17799, 5703, 7717], "target_count", 8120)
    assert plan["minority"] == "N1"
    assert plan["after"][1] == 8120
    assert sum(plan["after"]) == 49536
    with pytest.raises(somnus.ConfigError):
        somnus.plan_rebalance([1, 2, 3, 4, 5], "median")


def test_read_edf_calibrates_digital_values():
    digital = [((i * 37) % 4096) - 2048 for i in range(40)]
    raw = _edf_bytes("EEG Fpz-Cz", digital, spr=10)
    rec = somnus.read_edf(raw, "eeg  fpz-cz")
    assert rec["subject_id"] == "PY01"
    assert rec["sampling_rate"] == 10.0
    assert rec["duration"] == 4.0
    gain = 200.0 / 4095.0
    expected = [-100.0 + (d + 2048) * gain for d in digital]
    np.testing.assert_allclose(rec["samples"], expected, rtol=0, atol=1e-9)
    with pytest.raises(somnus.DataError):
        somnus.read_edf(raw[:-3], "EEG Fpz-Cz")
    with pytest.raises(somnus.DataError):
        somnus.read_edf(raw, "EEG Pz-Oz")

    hyp = somnus.read_hypnogram(b"0,30,Sleep stage W\n30,60,Sleep stage 2\n")
    assert hyp == [(0.0, 30.0, "Sleep stage W"), (30.0, 60.0, "Sleep stage 2")]


def test_spectral_corpus_shapes_and_frequencies():
    corpus = somnus.spectral_corpus(subjects=3, epochs_per_subject=20, seed=5)
    assert corpus["samples"].shape == (60, 256)
    assert corpus["samples"].dtype == np.float32
    assert np.abs(corpus["samples"]).max() <= 1.0
    assert len(corpus["subjects"]) == 60
    wake = np.flatnonzero(corpus["stages"] == 0)
    assert wake.size > 0
    f = somnus.dominant_frequency(corpus["samples"][wake[0]].astype(float).tolist(), 64.0)
    assert abs(f - 2.0) <= 0.5


@pytest.mark.skipif(not os.environ.get("SOMNUS_BIN"), reason="somnus binary not provided")
def test_cli_checkpoint_scores_in_python(tmp_path):
    binary = os.environ["SOMNUS_BIN"]
    subprocess.run([binary, "synth", "--subjects", "4", "--epochs-per-subject", "30",
                    "--out", str(tmp_path / "data"), "-q"], check=True)
    store = tmp_path / "data" / "epochs.segd"
    subprocess.run([binary, "train-clf", "-q", "--out", str(tmp_path / "clf"),
                    "--set", f"data.store={store}", "--set", "clf.filters=4,4,8",
                    "--set", "clf.hidden=8", "--set", "clf.epochs=2",
                    "--set", "sequence_length=10", "--set", "val_fraction=0.25"], check=True)
    data = somnus.load_epoch_store(str(store))
    probs = somnus.classify(str(tmp_path / "clf" / "best.segk"), data["samples"],
                            data["subjects"], sequence_length=10)
    assert probs.shape == (120, 5)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(somnus.ShapeError):
        somnus.classify(str(tmp_path / "clf" / "best.segk"), data["samples"][:, :100],
                        data["subjects"])
