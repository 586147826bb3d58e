# Copyright 2026 The Blankskip Authors
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

"""CTC blank-triggered dynamic layer skipping at desk scale."""

from ._core import (  # noqa: F401
    BenchRow,
    DecodeOptions,
    EditCounts,
    EncodeResult,
    LossTerms,
    Model,
    ModelConfig,
    PosteriorGrid,
    SpikeOffsetResult,
    SyntheticTask,
    TaskConfig,
    TrainConfig,
    TrainResult,
    Utterance,
    bench_csv,
    blank_posteriors,
    collapse,
    compute_skip_mask,
    ctc_loss,
    edit_distance,
    effective_layers,
    evaluate_greedy_ter,
    greedy_decode,
    kl_frame_loss,
    load_checkpoint,
    logsumexp,
    prefix_beam_search,
    read_dataset,
    run_bench,
    save_checkpoint,
    spike_offset,
    token_error_rate,
    train,
    write_dataset,
)

__version__ = "0.1.0"
