/* Copyright 2026 The hxr Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hxr/config.h"
#include "hxr/report.h"

namespace hxr {

struct RunInputs {
  LatentBundle latents;
  Tensor text;  // [text_tokens, text_dim]
};

// Standard-normal latents and text embeddings drawn from `seed`.
RunInputs make_inputs(const ModelConfig& model, uint64_t seed);

// Runs the configured policy and a full-compute reference on identical inputs.
// Traces come from the policy run when config.trace is set.
RunReport execute_run(const RunConfig& config, LayerTraces* traces = nullptr);

// Writes report.json and, when tracing, traces.csv and stability.csv into
// config.out_dir.
RunReport cmd_run(const RunConfig& config, bool wall_clock = true);

enum class SweepParam { kRatio, kThreshold, kInterval };

// Accepts R/K/M and ratio/threshold/interval.
SweepParam parse_sweep_param(std::string_view name);
std::string_view sweep_param_name(SweepParam param);
void apply_sweep_value(HeroConfig& hero, SweepParam param, std::string_view value);

// One row per value, in the given order. Errors and FLOPs are averaged over
// config.seeds consecutive seeds starting at config.seed.
std::vector<TableRow> sweep_points(const RunConfig& config, SweepParam param,
                                   const std::vector<std::string>& values);

// Analytic FLOPs only, for shapes too large to execute.
std::vector<TableRow> sweep_analytic(const CostShape& shape, const HeroConfig& hero, int steps,
                                     SweepParam param, const std::vector<std::string>& values);

// Writes sweep.csv into config.out_dir.
std::vector<TableRow> cmd_sweep(const RunConfig& config, SweepParam param,
                                const std::vector<std::string>& values);

CostShape preset_shape(std::string_view name);

struct CompareResult {
  std::vector<TableRow> rows;                    // seed-averaged, one per entry
  std::vector<std::vector<double>> seed_errors;  // [entry][seed], mean modality error
};

// Runs every config on the same seeds and inputs. All configs must share one
// model config; otherwise throws ConfigError naming the differing keys.
CompareResult compare_runs(const std::vector<RunConfig>& configs);

// Writes compare.csv into the first config's out_dir.
CompareResult cmd_compare(const std::vector<RunConfig>& configs);

struct AnalyzeResult {
  StabilityScores scores;
  std::string summary;
};

// Reads `path` (traces.csv, or a directory holding one), writes
// stability.csv next to it and summarizes the top_k most and least stable
// layers.
AnalyzeResult cmd_analyze(const std::string& path, int top_k = 3);

}  // namespace hxr
