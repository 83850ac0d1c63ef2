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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hxr/analyzer.h"
#include "hxr/cache_policy.h"
#include "hxr/config.h"

namespace hxr {

inline constexpr int kReportSchemaVersion = 1;

inline constexpr const char* kErrorMetric =
    "relative L2 of the final latents against a full-compute run from the same inputs, "
    "per modality after splitting; a latent-space proxy, not a perceptual or "
    "geometric quality score";

struct ModalityError {
  double video = 0.0;
  double depth = 0.0;
  double camera = 0.0;
  double mean = 0.0;
};

// Relative L2 per modality; empty modalities contribute 0 and are left out of
// the mean.
ModalityError modality_error(const LatentBundle& approx, const LatentBundle& reference);

struct RunReport {
  RunConfig config;
  std::string policy;
  ModalityError error;
  std::vector<StepRecord> steps;
  uint64_t total_flops = 0;
  uint64_t full_total_flops = 0;
  double speedup = 1.0;
  double seconds = 0.0;       // policy run
  double full_seconds = 0.0;  // reference run
  std::optional<StabilityScores> stability;
  std::vector<std::string> warnings;
};

// Pretty-printed JSON with a trailing newline. Wall-clock fields are the only
// nondeterministic content and are omitted when `wall_clock` is false.
std::string report_json(const RunReport& report, bool wall_clock = true);

struct TableRow {
  std::string label;  // policy name or swept value
  ModalityError error;
  bool has_error = true;  // false for analytic rows
  uint64_t flops = 0;
  double speedup = 1.0;
};

// CSV: first_column,error_video,error_depth,error_camera,error_mean,flops,speedup.
// Analytic rows leave the error columns empty.
void write_table_csv(std::ostream& out, const std::string& first_column,
                     const std::vector<TableRow>& rows);

}  // namespace hxr
