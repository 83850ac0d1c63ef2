# Copyright 2026 The hxr Authors. All Rights Reserved.
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
#

"""Cached inference policies for a toy multi-modal diffusion transformer."""

from ._hxr import (
    ConfigError,
    ContractError,
    Error,
    HeroConfig,
    ModelConfig,
    NumericError,
    RunConfig,
    StateError,
    StructuralError,
    ToyMMDiT,
    build_schedule,
    concat_modalities,
    execute_run,
    flops_attention,
    flops_ffn,
    flops_policy_run,
    load_config,
    make_inputs,
    parse_config,
    run_denoising,
    second_order_variance,
    split_modalities,
    stability_scores,
)

POLICIES = ("full", "hero", "uniform_reuse", "uniform_extrapolation")

__all__ = [
    "ConfigError",
    "ContractError",
    "Error",
    "HeroConfig",
    "ModelConfig",
    "NumericError",
    "POLICIES",
    "RunConfig",
    "StateError",
    "StructuralError",
    "ToyMMDiT",
    "build_schedule",
    "concat_modalities",
    "execute_run",
    "flops_attention",
    "flops_ffn",
    "flops_policy_run",
    "load_config",
    "make_inputs",
    "parse_config",
    "run_denoising",
    "second_order_variance",
    "split_modalities",
    "stability_scores",
]
