# Copyright 2026 The ISACL Authors.
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

"""Python bindings for the internal-state leakage judge."""

from ._isacl import (
    DataError,
    DimensionError,
    GateHandler,
    InvalidArgument,
    IoError,
    IsaclError,
    JudgeModel,
    ReferenceDatabase,
    evaluate,
    gen_synthetic,
    lcs_length,
    load_model,
    partition,
    read_state_file,
    rouge_1,
    rouge_l,
    run_cli,
    score_triplets_file,
    tokenize,
    train,
    write_state_file,
)

LEAK = 0
NON_DISCLOSURE = 1
DISCARD = 2

__all__ = [
    "DataError",
    "DimensionError",
    "GateHandler",
    "InvalidArgument",
    "IoError",
    "IsaclError",
    "JudgeModel",
    "ReferenceDatabase",
    "evaluate",
    "gen_synthetic",
    "lcs_length",
    "load_model",
    "partition",
    "read_state_file",
    "rouge_1",
    "rouge_l",
    "run_cli",
    "score_triplets_file",
    "tokenize",
    "train",
    "write_state_file",
    "LEAK",
    "NON_DISCLOSURE",
    "DISCARD",
]
