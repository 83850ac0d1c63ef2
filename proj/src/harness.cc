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

#include "hxr/harness.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hxr/error.h"
#include "hxr/rng.h"

namespace hxr {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kLatentStream = 5;
constexpr uint64_t kTextStream = 6;

Tensor normal_tensor(std::vector<int64_t> shape, uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (float& v : t.data()) v = static_cast<float>(rng.normal());
  return t;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("run.out", "cannot create '" + dir + "'");
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("run.out", "cannot write '" + path.string() + "'");
  out << text;
}

template <typename Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

struct PointStats {
  ModalityError error;
  double flops = 0.0;
  double full_flops = 0.0;
};

PointStats run_seeds(const RunConfig& config, std::vector<double>* per_seed = nullptr) {
  PointStats stats;
  for (int i = 0; i < config.seeds; ++i) {
    RunConfig point = config;
    point.set_seed(config.seed + static_cast<uint64_t>(i));
    point.trace = false;
    const RunReport r = execute_run(point);
    stats.error.video += r.error.video;
    stats.error.depth += r.error.depth;
    stats.error.camera += r.error.camera;
    stats.error.mean += r.error.mean;
    stats.flops += static_cast<double>(r.total_flops);
    stats.full_flops += static_cast<double>(r.full_total_flops);
    if (per_seed) per_seed->push_back(r.error.mean);
  }
  const double n = config.seeds;
  stats.error.video /= n;
  stats.error.depth /= n;
  stats.error.camera /= n;
  stats.error.mean /= n;
  stats.flops /= n;
  stats.full_flops /= n;
  return stats;
}

TableRow make_row(std::string label, const PointStats& s) {
  TableRow row;
  row.label = std::move(label);
  row.error = s.error;
  row.flops = static_cast<uint64_t>(s.flops + 0.5);
  row.speedup = s.flops > 0.0 ? s.full_flops / s.flops : 0.0;
  return row;
}

std::string summarize(const StabilityScores& scores, int top_k) {
  const std::vector<int> order = rank_by_stability(scores);
  const int k = std::min<int>(top_k, static_cast<int>(order.size()));
  std::ostringstream out;
  out.precision(4);
  auto list = [&](const char* title, auto first) {
    out << title;
    for (int i = 0; i < k; ++i) {
      const int layer = *(first + i);
      out << (i ? ", " : " ") << "layer " << layer << " (" << std::fixed
          << scores.score[layer - 1] << ")";
    }
    out << "\n";
  };
  list("most stable:", order.begin());
  list("least stable:", order.rbegin());
  return out.str();
}

}  // namespace

RunInputs make_inputs(const ModelConfig& model, uint64_t seed) {
  const int64_t f = model.frames, h = model.height, w = model.width;
  RunInputs in;
  in.latents.video = normal_tensor({f, h, w, model.video_channels}, derive_seed(seed, kLatentStream, 0));
  in.latents.depth = normal_tensor({f, h, w, model.depth_channels}, derive_seed(seed, kLatentStream, 1));
  in.latents.camera =
      normal_tensor({f, h, w, model.camera_channels}, derive_seed(seed, kLatentStream, 2));
  in.text = normal_tensor({model.text_tokens, model.text_dim}, derive_seed(seed, kTextStream));
  return in;
}

RunReport execute_run(const RunConfig& config, LayerTraces* traces) {
  config.validate();
  const ToyMMDiT model(config.model);
  const RunInputs inputs = make_inputs(config.model, config.seed);
  const Policy policy = config.make_policy();

  RunOptions options;
  options.step_size = config.step_size;
  RunOptions reference_options = options;
  reference_options.trace = config.trace && policy.kind == PolicyKind::kFull;
  RunResult full = run_denoising(model, Policy::full(), config.steps, inputs.latents, inputs.text,
                                 reference_options);
  RunResult result;
  if (policy.kind == PolicyKind::kFull) {
    result = full;
  } else {
    options.trace = config.trace;
    result = run_denoising(model, policy, config.steps, inputs.latents, inputs.text, options);
  }

  RunReport report;
  report.config = config;
  report.policy = result.policy;
  report.error = modality_error(result.final_latents, full.final_latents);
  report.steps = result.steps;
  report.total_flops = result.total_flops;
  report.full_total_flops = full.total_flops;
  report.speedup = result.total_flops > 0
                       ? static_cast<double>(full.total_flops) / static_cast<double>(result.total_flops)
                       : 1.0;
  report.seconds = result.seconds;
  report.full_seconds = full.seconds;
  report.warnings = result.warnings;
  if (config.trace) {
    if (config.steps >= 3 && config.model.layers > 0) {
      report.stability = analyze_traces(result.traces);
    } else {
      report.warnings.push_back("stability analysis skipped: needs >= 3 steps and >= 1 layer");
    }
    if (traces) *traces = std::move(result.traces);
  }
  return report;
}

RunReport cmd_run(const RunConfig& config, bool wall_clock) {
  config.validate();
  const fs::path dir = ensure_dir(config.out_dir);
  LayerTraces traces;
  RunReport report = execute_run(config, &traces);
  write_file(dir / "report.json", report_json(report, wall_clock));
  if (config.trace) {
    write_file(dir / "traces.csv", to_text([&](std::ostream& o) { write_traces_csv(o, traces); }));
    if (report.stability) {
      write_file(dir / "stability.csv",
                 to_text([&](std::ostream& o) { write_stability_csv(o, *report.stability); }));
    }
  }
  return report;
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "R" || name == "ratio") return SweepParam::kRatio;
  if (name == "K" || name == "threshold") return SweepParam::kThreshold;
  if (name == "M" || name == "interval") return SweepParam::kInterval;
  throw ConfigError("--param", "unknown sweep parameter '" + std::string(name) +
                                   "' (expected R, K or M)");
}

std::string_view sweep_param_name(SweepParam param) {
  switch (param) {
    case SweepParam::kRatio:
      return "R";
    case SweepParam::kThreshold:
      return "K";
    case SweepParam::kInterval:
      return "M";
  }
  return "?";
}

void apply_sweep_value(HeroConfig& hero, SweepParam param, std::string_view value) {
  RunConfig scratch;
  scratch.hero = hero;
  switch (param) {
    case SweepParam::kRatio:
      apply_setting(scratch, "hero.ratio", value);
      break;
    case SweepParam::kThreshold:
      apply_setting(scratch, "hero.threshold", value);
      break;
    case SweepParam::kInterval:
      apply_setting(scratch, "hero.interval", value);
      break;
  }
  hero = scratch.hero;
}

std::vector<TableRow> sweep_points(const RunConfig& config, SweepParam param,
                                   const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("--values", "no sweep values given");
  std::vector<TableRow> rows;
  for (const std::string& value : values) {
    RunConfig point = config;
    apply_sweep_value(point.hero, param, value);
    point.validate();
    rows.push_back(make_row(value, run_seeds(point)));
  }
  return rows;
}

std::vector<TableRow> sweep_analytic(const CostShape& shape, const HeroConfig& hero, int steps,
                                     SweepParam param, const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("--values", "no sweep values given");
  std::vector<TableRow> rows;
  for (const std::string& value : values) {
    HeroConfig point = hero;
    apply_sweep_value(point, param, value);
    point.validate(shape.layers);
    const PolicyCost cost = flops_policy_run(shape, Policy::hero_policy(point), steps);
    TableRow row;
    row.label = value;
    row.has_error = false;
    row.flops = cost.total_flops;
    row.speedup = cost.speedup_vs_full;
    rows.push_back(row);
  }
  return rows;
}

std::vector<TableRow> cmd_sweep(const RunConfig& config, SweepParam param,
                                const std::vector<std::string>& values) {
  config.validate();
  const fs::path dir = ensure_dir(config.out_dir);
  std::vector<TableRow> rows = sweep_points(config, param, values);
  write_file(dir / "sweep.csv", to_text([&](std::ostream& o) {
               write_table_csv(o, std::string(sweep_param_name(param)), rows);
             }));
  return rows;
}

CostShape preset_shape(std::string_view name) {
  if (name == "cogvideox5b") return CostShape::cogvideox_5b();
  throw ConfigError("--preset", "unknown shape preset '" + std::string(name) +
                                    "' (expected cogvideox5b)");
}

CompareResult compare_runs(const std::vector<RunConfig>& configs) {
  if (configs.empty()) throw ConfigError("--policy", "nothing to compare");
  const RunConfig& first = configs.front();
  for (const RunConfig& c : configs) {
    if (c.model == first.model && c.steps == first.steps && c.seed == first.seed &&
        c.seeds == first.seeds && c.step_size == first.step_size) {
      continue;
    }
    // Name the first differing key via the canonical text form.
    std::istringstream a(to_text([&](std::ostream& o) { write_config(o, first); }));
    std::istringstream b(to_text([&](std::ostream& o) { write_config(o, c); }));
    std::string la, lb, section;
    while (std::getline(a, la) && std::getline(b, lb)) {
      if (!la.empty() && la.front() == '[') section = la.substr(1, la.size() - 2);
      if (la != lb && section != "hero" && la.rfind("policy", 0) != 0 && la.rfind("out", 0) != 0 &&
          la.rfind("trace", 0) != 0) {
        const std::string key = section + "." + la.substr(0, la.find(' '));
        throw ConfigError(key, "compared runs must share model and run settings ('" + la +
                                   "' vs '" + lb + "')");
      }
    }
    throw ConfigError("model", "compared runs must share model and run settings");
  }
  CompareResult out;
  for (const RunConfig& c : configs) {
    c.validate();
    std::vector<double> per_seed;
    const PointStats stats = run_seeds(c, &per_seed);
    out.rows.push_back(make_row(c.policy, stats));
    out.seed_errors.push_back(std::move(per_seed));
  }
  return out;
}

CompareResult cmd_compare(const std::vector<RunConfig>& configs) {
  CompareResult result = compare_runs(configs);
  const fs::path dir = ensure_dir(configs.front().out_dir);
  write_file(dir / "compare.csv",
             to_text([&](std::ostream& o) { write_table_csv(o, "policy", result.rows); }));
  return result;
}

AnalyzeResult cmd_analyze(const std::string& path, int top_k) {
  fs::path file(path);
  if (fs::is_directory(file)) file /= "traces.csv";
  std::ifstream in(file);
  if (!in) throw StateError("no traces at '" + file.string() + "'; run with --trace first");
  const LayerTraces traces = read_traces_csv(in);
  if (traces.empty()) throw StateError("'" + file.string() + "' holds no traces");
  AnalyzeResult result;
  result.scores = analyze_traces(traces);
  write_file(file.parent_path() / "stability.csv",
             to_text([&](std::ostream& o) { write_stability_csv(o, result.scores); }));
  result.summary = summarize(result.scores, top_k);
  return result;
}

}  // namespace hxr
