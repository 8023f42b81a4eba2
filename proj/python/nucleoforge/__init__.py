# Copyright 2026 The NucleoForge Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Label-space augmentation for nuclear instance segmentation."""

from nucleoforge._core import (
    NucleoForgeError,
    aji,
    constrained_dilate,
    evaluate,
    extract_instances,
    internuclear_mask,
    linear_betas,
    masked_q_sample,
    migrate,
    oracle_inpaint,
    p_step,
    panoptic_quality,
    patch_origins,
    q_sample,
    random_migrate,
    repaint_step,
    scores,
    structural_label,
    synth_label,
)

__all__ = [
    "NucleoForgeError",
    "aji",
    "constrained_dilate",
    "evaluate",
    "extract_instances",
    "internuclear_mask",
    "linear_betas",
    "masked_q_sample",
    "migrate",
    "oracle_inpaint",
    "p_step",
    "panoptic_quality",
    "patch_origins",
    "q_sample",
    "random_migrate",
    "repaint_step",
    "scores",
    "structural_label",
    "synth_label",
]
