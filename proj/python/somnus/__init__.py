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
"""Single-channel EEG sleep staging: EDF reading, metrics, ensembles, models."""

from somnus._core import (
    STAGES,
    ConfigError,
    DataError,
    EpochRecord,
    ShapeError,
    SomnusError,
    UsageError,
    classify,
    derive_seed,
    dominant_frequency,
    load_epoch_store,
    majority_vote,
    metrics,
    metrics_from_confusion,
    plan_rebalance,
    read_edf,
    read_hypnogram,
    sample_generator,
    select_top_m,
    spectral_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "STAGES",
    "ConfigError",
    "DataError",
    "EpochRecord",
    "ShapeError",
    "SomnusError",
    "UsageError",
    "classify",
    "derive_seed",
    "dominant_frequency",
    "load_epoch_store",
    "majority_vote",
    "metrics",
    "metrics_from_confusion",
    "plan_rebalance",
    "read_edf",
    "read_hypnogram",
    "sample_generator",
    "select_top_m",
    "spectral_corpus",
]
