# Copyright 2026 The miverify Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Image-caption package integrity assessment."""

from ._miverify import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    EmbedModel,
    Error,
    EvaluationReport,
    FeatureDataset,
    FormatError,
    MediaPackage,
    OutlierModel,
    ShapeError,
    ValidationError,
    f1_scores,
    fit_odm,
    load_dataset,
    load_model,
    load_odm,
    make_synthetic,
    run_experiment,
    save_dataset,
    split_dataset,
    tamper,
    train_model,
    validate_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
