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

#include "hxr/report.h"

#include <charconv>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace hxr {
namespace {

using nlohmann::ordered_json;

ordered_json error_json(const ModalityError& e) {
  return ordered_json{{"video", e.video}, {"depth", e.depth}, {"camera", e.camera}, {"mean", e.mean}};
}

// Shortest decimal that round trips the float, so 0.1f prints as 0.1.
double float_value(float x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::strtod(std::string(buf, r.ptr).c_str(), nullptr);
}

ordered_json config_json(const RunConfig& c) {
  const ModelConfig& m = c.model;
  const HeroConfig& h = c.hero;
  return ordered_json{
      {"model",
       {{"layers", m.layers},
        {"dim", m.dim},
        {"heads", m.heads},
        {"ffn_dim", m.ffn_dim},
        {"frames", m.frames},
        {"height", m.height},
        {"width", m.width},
        {"video_channels", m.video_channels},
        {"depth_channels", m.depth_channels},
        {"camera_channels", m.camera_channels},
        {"embed_h", m.embed_h},
        {"embed_w", m.embed_w},
        {"text_tokens", m.text_tokens},
        {"text_dim", m.text_dim},
        {"seed", m.seed},
        {"positional_encoding", m.positional_encoding},
        {"time_embedding", m.time_embedding},
        {"noise_layers", m.noise_layers},
        {"noise_sigma", float_value(m.noise_sigma)},
        {"noise_seed", m.noise_seed}}},
      {"hero",
       {{"interval", h.interval},
        {"threshold", h.threshold},
        {"ratio", h.ratio},
        {"patch_h", h.patch_h},
        {"patch_w", h.patch_w},
        {"max_age", h.effective_max_age()},
        {"rng_seed", h.rng_seed},
        {"text_refresh", to_string(h.text_refresh)},
        {"base", to_string(h.base)},
        {"edges", to_string(h.edges)}}},
      {"run",
       {{"policy", c.policy},
        {"steps", c.steps},
        {"seed", c.seed},
        {"step_size", float_value(c.step_size)},
        {"trace", c.trace}}},
  };
}

}  // namespace

ModalityError modality_error(const LatentBundle& approx, const LatentBundle& reference) {
  ModalityError e;
  int present = 0;
  auto one = [&](const Tensor& a, const Tensor& b) {
    if (b.empty()) return 0.0;
    ++present;
    return relative_l2(a, b);
  };
  e.video = one(approx.video, reference.video);
  e.depth = one(approx.depth, reference.depth);
  e.camera = one(approx.camera, reference.camera);
  e.mean = present > 0 ? (e.video + e.depth + e.camera) / present : 0.0;
  return e;
}

std::string report_json(const RunReport& report, bool wall_clock) {
  ordered_json steps = ordered_json::array();
  for (const StepRecord& s : report.steps) {
    steps.push_back(ordered_json{{"position", s.position},
                                 {"timestep", s.timestep},
                                 {"anchor", s.anchor},
                                 {"flops", s.flops},
                                 {"selected", s.selected},
                                 {"forced", s.forced},
                                 {"mean_age", s.mean_age}});
  }
  std::vector<uint64_t> per_step;
  for (const StepRecord& s : report.steps) per_step.push_back(s.flops);

  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["policy"] = report.policy;
  doc["config"] = config_json(report.config);
  doc["error_metric"] = kErrorMetric;
  doc["error_vs_full"] = error_json(report.error);
  doc["flops"] = ordered_json{{"convention", std::string(kFlopConvention)},
                              {"per_step", per_step},
                              {"total_flops", report.total_flops},
                              {"full_total_flops", report.full_total_flops},
                              {"speedup_vs_full", report.speedup}};
  if (wall_clock) {
    doc["wall_clock"] = ordered_json{{"seconds", report.seconds},
                                     {"full_seconds", report.full_seconds},
                                     {"speedup", report.seconds > 0.0
                                                     ? report.full_seconds / report.seconds
                                                     : 0.0}};
  }
  doc["steps"] = steps;
  if (report.stability) {
    ordered_json rows = ordered_json::array();
    for (size_t l = 0; l < report.stability->score.size(); ++l) {
      rows.push_back(ordered_json{{"layer", l + 1},
                                  {"variance", report.stability->variance[l]},
                                  {"score", report.stability->score[l]}});
    }
    doc["stability"] = rows;
  } else {
    doc["stability"] = nullptr;
  }
  doc["warnings"] = report.warnings;
  return doc.dump(2) + "\n";
}

void write_table_csv(std::ostream& out, const std::string& first_column,
                     const std::vector<TableRow>& rows) {
  out << first_column << ",error_video,error_depth,error_camera,error_mean,flops,speedup\n";
  std::ostringstream line;
  line.precision(10);
  for (const TableRow& r : rows) {
    line.str("");
    line << r.label << ",";
    if (r.has_error) {
      line << r.error.video << "," << r.error.depth << "," << r.error.camera << "," << r.error.mean;
    } else {
      line << ",,,";
    }
    line << "," << r.flops << "," << r.speedup << "\n";
    out << line.str();
  }
}

}  // namespace hxr
