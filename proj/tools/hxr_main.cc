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

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hxr/error.h"
#include "hxr/harness.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<bool> trace;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Config file");
  cmd->add_option("--out", f.out, "Output directory (overrides run.out)");
  cmd->add_option("--seed", f.seed, "Seed for model weights, inputs and sampling");
  cmd->add_option("--set", f.sets, "Extra setting, e.g. --set hero.ratio=0.5");
}

hxr::RunConfig build_config(const CommonFlags& f, const hxr::RunConfig& base = {}) {
  hxr::RunConfig config = f.config_path.empty() ? base : hxr::load_config(f.config_path);
  for (const std::string& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw hxr::ConfigError(s, "--set expects key=value");
    hxr::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) config.set_seed(*f.seed);
  if (f.trace) config.trace = *f.trace;
  if (!f.out.empty()) config.out_dir = f.out;
  return config;
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    std::stringstream in(item);
    std::string part;
    while (std::getline(in, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

void print_table(const std::string& first, const std::vector<hxr::TableRow>& rows) {
  hxr::write_table_csv(std::cout, first, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hxr: cached inference experiments on a toy multi-modal diffusion transformer"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string run_policy;
  bool no_wall_clock = false;
  auto* run = app.add_subcommand("run", "Run one policy and write report.json");
  add_common(run, run_flags);
  run->add_option("--trace", run_flags.trace, "Record per-layer feature traces");
  run->add_option("--policy", run_policy, "full | hero | uniform_reuse | uniform_extrapolation");
  run->add_flag("--no-wall-clock", no_wall_clock, "Omit timings so the report is reproducible");

  CommonFlags sweep_flags;
  std::string param, preset;
  std::vector<std::string> values;
  std::optional<int> preset_steps;
  auto* sweep = app.add_subcommand("sweep", "Sweep R, K or M and write sweep.csv");
  add_common(sweep, sweep_flags);
  sweep->add_option("--param", param, "R | K | M")->required();
  sweep->add_option("--values", values, "Comma separated values")->required();
  sweep->add_option("--preset", preset, "Analytic FLOPs for a named shape (cogvideox5b)");
  sweep->add_option("--steps", preset_steps, "Denoising steps for --preset (default 50)");

  std::string trace_path;
  int top_k = 3;
  auto* analyze = app.add_subcommand("analyze", "Stability scores from recorded traces");
  analyze->add_option("traces", trace_path, "traces.csv or a run output directory")->required();
  analyze->add_option("--top-k", top_k, "Layers listed per end of the ranking");

  CommonFlags compare_flags;
  std::vector<std::string> compare_configs, compare_policies;
  auto* compare = app.add_subcommand("compare", "Run several policies on identical inputs");
  add_common(compare, compare_flags);
  compare->add_option("--configs", compare_configs, "One config per compared row");
  compare->add_option("--policy", compare_policies,
                      "Policies to compare (default: all four)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      hxr::RunConfig config = build_config(run_flags);
      if (!run_policy.empty()) hxr::apply_setting(config, "run.policy", run_policy);
      const hxr::RunReport r = hxr::cmd_run(config, !no_wall_clock);
      std::cout << "policy " << r.policy << "\n"
                << "error_vs_full mean " << r.error.mean << " (video " << r.error.video
                << ", depth " << r.error.depth << ", camera " << r.error.camera << ")\n"
                << "flops " << r.total_flops << " full " << r.full_total_flops << " speedup "
                << r.speedup << "\n"
                << "report " << config.out_dir << "/report.json\n";
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*sweep) {
      const hxr::SweepParam p = hxr::parse_sweep_param(param);
      const std::vector<std::string> list = split_list(values);
      if (!preset.empty()) {
        // Without a config file, start from the large-model HERO defaults.
        hxr::RunConfig base;
        base.hero = hxr::HeroConfig{};
        const hxr::RunConfig config = build_config(sweep_flags, base);
        const auto rows = hxr::sweep_analytic(hxr::preset_shape(preset), config.hero,
                                              preset_steps.value_or(50), p, list);
        print_table(std::string(hxr::sweep_param_name(p)), rows);
      } else {
        const hxr::RunConfig config = build_config(sweep_flags);
        print_table(std::string(hxr::sweep_param_name(p)), hxr::cmd_sweep(config, p, list));
      }
    } else if (*analyze) {
      const hxr::AnalyzeResult r = hxr::cmd_analyze(trace_path, top_k);
      std::cout << r.summary;
    } else if (*compare) {
      std::vector<hxr::RunConfig> configs;
      if (!compare_configs.empty()) {
        for (const std::string& path : compare_configs) {
          CommonFlags f = compare_flags;
          f.config_path = path;
          configs.push_back(build_config(f));
        }
      } else {
        std::vector<std::string> policies = split_list(compare_policies);
        if (policies.empty()) {
          policies = {"full", "hero", "uniform_reuse", "uniform_extrapolation"};
        }
        const hxr::RunConfig base = build_config(compare_flags);
        for (const std::string& name : policies) {
          hxr::RunConfig c = base;
          hxr::apply_setting(c, "run.policy", name);
          configs.push_back(c);
        }
      }
      const hxr::CompareResult r = hxr::cmd_compare(configs);
      print_table("policy", r.rows);
      // Paired per-seed tally when both cached extrapolating policies ran.
      std::optional<size_t> hero, ue;
      for (size_t i = 0; i < configs.size(); ++i) {
        if (configs[i].policy == "hero") hero = i;
        if (configs[i].policy == "uniform_extrapolation") ue = i;
      }
      if (hero && ue) {
        int wins = 0;
        const auto& h = r.seed_errors[*hero];
        const auto& u = r.seed_errors[*ue];
        for (size_t s = 0; s < h.size(); ++s) wins += h[s] <= u[s];
        std::cout << "hero <= uniform_extrapolation on " << wins << "/" << h.size()
                  << " seeds\n";
      }
    }
  } catch (const hxr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hxr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
