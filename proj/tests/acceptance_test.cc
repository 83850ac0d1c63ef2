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

// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "hxr/analyzer.h"
#include "hxr/cache_policy.h"
#include "hxr/config.h"
#include "hxr/flops.h"
#include "hxr/harness.h"
#include "hxr/patch_refresh.h"
#include "hxr/report.h"
#include "test_support.h"

namespace {

using namespace hxr;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

RunResult run_toy(const ToyMMDiT& model, const Policy& policy, int steps, uint64_t input_seed) {
  const RunInputs in = make_inputs(model.config(), input_seed);
  return run_denoising(model, policy, steps, in.latents, in.text);
}

// Toy whose first two layers emit temporally rough features.
ModelConfig unstable_toy(uint64_t seed) {
  ModelConfig c = testing::toy_config(seed);
  c.noise_layers = {1, 2};
  c.noise_sigma = 1.0f;
  c.noise_seed = seed;
  return c;
}

Outcome degenerate_exactness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const ToyMMDiT model(testing::toy_config(seed));
    HeroConfig h;
    h.threshold = model.config().layers + 1;
    h.ratio = 1.0;
    h.rng_seed = seed;
    const RunResult full = run_toy(model, Policy::full(), 12, seed);
    const RunResult hero = run_toy(model, Policy::hero_policy(h), 12, seed);
    worst = std::max(worst, relative_l2(hero.final_unified.z, full.final_unified.z));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-5 && secs < 10.0, fmt("max rel L2 %.3g over 5 seeds, %.2f s", worst, secs)};
}

Outcome policy_identity() {
  int identical = 0;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    const ToyMMDiT model(testing::toy_config(seed));
    HeroConfig h;
    h.threshold = 1;
    h.rng_seed = seed;
    const RunResult a = run_toy(model, Policy::hero_policy(h), 12, seed);
    const RunResult b = run_toy(model, Policy::uniform_extrapolation(h.interval), 12, seed);
    identical += bitwise_equal(a.final_unified.z, b.final_unified.z) && a.total_flops == b.total_flops;
  }
  return {identical == 3, fmt("%d/3 seeds bitwise identical", identical)};
}

Outcome extrapolation_exactness() {
  double worst = 0.0;
  bool checked = true;
  for (int m : {1, 2, 3}) {
    const double e = testing::affine_extrapolation_error(m, 13, 2);
    if (e < 0.0) checked = false;
    worst = std::max(worst, e);
  }
  return {checked && worst <= 1e-6, fmt("max rel error %.3g for M in {1,2,3}", worst)};
}

Outcome age_bound() {
  const ModelConfig c = testing::toy_config();
  HeroConfig h;
  const int bound = h.effective_max_age();
  const PatchPartition p = partition_tokens(c.frames, c.grid_h(), c.grid_w(), h.patch_h, h.patch_w);
  int violations = 0, worst = 0;
  for (double r : {0.1, 0.2, 0.5}) {
    for (uint64_t seed = 0; seed < 10; ++seed) {
      RefreshState state(p.tokens, seed);
      for (int step = 0; step < 1000; ++step) {
        update_ages(state, select_tokens(p, state, r, bound));
        worst = std::max(worst, state.max_age());
        violations += state.max_age() > bound;
      }
    }
  }
  return {violations == 0, fmt("%d violations, max age %d, A_max %d", violations, worst, bound)};
}

Outcome stability_direction() {
  int hits = 0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const ToyMMDiT model(unstable_toy(seed));
    const RunInputs in = make_inputs(model.config(), seed);
    RunOptions o;
    o.trace = true;
    const RunResult full = run_denoising(model, Policy::full(), 12, in.latents, in.text, o);
    const StabilityScores s = analyze_traces(full.traces);
    hits += std::max(s.score[0], s.score[1]) < std::min(s.score[4], s.score[5]);
  }
  return {hits >= 9, fmt("layers 1-2 below 5-6 on %d/10 seeds (sigma 1.0)", hits)};
}

Outcome flop_ratio() {
  const CostShape shape = CostShape::cogvideox_5b();
  HeroConfig h;
  h.threshold = 20;
  h.ratio = 0.2;
  h.interval = 2;
  const double s2 = flops_policy_run(shape, Policy::hero_policy(h), 50).speedup_vs_full;
  h.interval = 3;
  const double s3 = flops_policy_run(shape, Policy::hero_policy(h), 50).speedup_vs_full;
  const bool ok2 = std::abs(s2 / 1.730 - 1.0) <= 0.15;
  const bool ok3 = std::abs(s3 / 1.97 - 1.0) <= 0.15;
  return {ok2 && ok3, fmt("M=2 speedup %.3f (target 1.730 +-15%%), M=3 speedup %.3f (target 1.97 "
                          "+-15%%)",
                          s2, s3)};
}

Outcome ablation_monotonicity() {
  const CostShape shape = CostShape::cogvideox_5b();
  HeroConfig h;
  h.threshold = 20;
  bool ok = true;
  std::string ks, rs;
  uint64_t last = 0;
  for (int k = 5; k <= 35; k += 5) {
    h.threshold = k;
    const uint64_t f = flops_policy_run(shape, Policy::hero_policy(h), 50).total_flops;
    ok = ok && f > last;
    last = f;
    ks += fmt(" %.0f", static_cast<double>(f) / 1e12);
  }
  h.threshold = 20;
  last = 0;
  for (double r : {0.2, 0.4, 0.6, 0.8}) {
    h.ratio = r;
    const uint64_t f = flops_policy_run(shape, Policy::hero_policy(h), 50).total_flops;
    ok = ok && f > last;
    last = f;
    rs += fmt(" %.0f", static_cast<double>(f) / 1e12);
  }
  return {ok, "TFLOPs over K:" + ks + "; over R:" + rs};
}

Outcome quality_ordering() {
  int wins = 0;
  double hero_sum = 0.0, ue_sum = 0.0;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const ToyMMDiT model(unstable_toy(seed));
    HeroConfig h;
    h.interval = 2;
    h.threshold = 4;
    h.ratio = 0.2;
    h.rng_seed = seed;
    const RunResult full = run_toy(model, Policy::full(), 12, seed);
    const double eh =
        relative_l2(run_toy(model, Policy::hero_policy(h), 12, seed).final_unified.z, full.final_unified.z);
    const double eu = relative_l2(run_toy(model, Policy::uniform_extrapolation(2), 12, seed).final_unified.z,
                                  full.final_unified.z);
    wins += eh <= eu;
    hero_sum += eh;
    ue_sum += eu;
  }
  return {wins >= 8, fmt("HERO <= UniformExtrapolation on %d/10 seeds (mean error %.4f vs %.4f)",
                         wins, hero_sum / 10, ue_sum / 10)};
}

Outcome variance_oracle() {
  const FeatureTrace spike = {{0}, {0}, {1}, {0}, {0}};
  const double v = second_order_variance(spike);
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    FeatureTrace t(3 + seed % 30, std::vector<float>(5));
    for (auto& step : t) {
      for (float& x : step) x = static_cast<float>(rng.normal());
    }
    const double base = second_order_variance(t);
    FeatureTrace shifted = t, scaled = t;
    const float shift = static_cast<float>(rng.normal() * 3.0);
    const float alpha = static_cast<float>(0.25 + rng.uniform() * 4.0);
    for (auto& step : shifted) {
      for (float& x : step) x += shift;
    }
    for (auto& step : scaled) {
      for (float& x : step) x *= alpha;
    }
    const double denom = std::max(base, 1e-12);
    worst = std::max(worst, std::abs(second_order_variance(shifted) - base) / denom);
    worst = std::max(worst, std::abs(second_order_variance(scaled) - alpha * alpha * base) /
                                (alpha * alpha * denom));
  }
  return {v == 2.0 && worst <= 1e-6, fmt("spike variance %.17g, max invariance error %.3g", v, worst)};
}

Outcome golden_report() {
  const std::string dir = HXR_SOURCE_DIR;
  RunConfig c = load_config(dir + "/configs/golden.ini");
  const std::string a = report_json(execute_run(c), false);
  const std::string b = report_json(execute_run(c), false);
  std::ifstream in(dir + "/tests/golden/report_hero.json", std::ios::binary);
  if (!in) return {false, "tests/golden/report_hero.json missing"};
  const std::string golden(std::istreambuf_iterator<char>(in), {});
  const bool stable = a == b;
  const bool same = a == golden;
  return {stable && same, fmt("repeat %s, golden %s (%zu bytes)", stable ? "identical" : "differs",
                              same ? "matches" : "differs", a.size())};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"degenerate exactness", degenerate_exactness},
      {"policy identity", policy_identity},
      {"extrapolation exactness", extrapolation_exactness},
      {"age bound", age_bound},
      {"stability direction", stability_direction},
      {"FLOP ratio", flop_ratio},
      {"ablation monotonicity", ablation_monotonicity},
      {"quality ordering", quality_ordering},
      {"variance oracle", variance_oracle},
      {"golden report", golden_report},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
