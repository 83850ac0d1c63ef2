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

#include "hxr/flops.h"

#include "hxr/cache_policy.h"
#include "hxr/error.h"
#include "hxr/patch_refresh.h"
#include "hxr/toy_mmdit.h"

namespace hxr {

uint64_t flops_attention(uint64_t seq, uint64_t dim, uint64_t /*heads*/) {
  return flops_attention_masked(seq, seq, dim);
}

uint64_t flops_ffn(uint64_t tokens, uint64_t dim, uint64_t ffn_dim) {
  return 2 * (2 * tokens * dim * ffn_dim);
}

uint64_t flops_attention_masked(uint64_t seq, uint64_t queries, uint64_t dim) {
  const uint64_t q_and_o = 2 * queries * dim * dim;
  const uint64_t k_and_v = 2 * seq * dim * dim;
  const uint64_t scores_and_mix = 2 * queries * seq * dim;
  return 2 * (q_and_o + k_and_v + scores_and_mix);
}

uint64_t flops_extrapolate(uint64_t rows, uint64_t dim) { return 2 * rows * dim; }

CostShape CostShape::from_model(const ModelConfig& c) {
  CostShape s;
  s.layers = c.layers;
  s.dim = static_cast<uint64_t>(c.dim);
  s.heads = static_cast<uint64_t>(c.heads);
  s.ffn_dim = static_cast<uint64_t>(c.ffn_dim);
  s.frames = c.frames;
  s.grid_h = c.grid_h();
  s.grid_w = c.grid_w();
  s.text_tokens = static_cast<uint64_t>(c.text_tokens);
  return s;
}

CostShape CostShape::cogvideox_5b() {
  CostShape s;
  s.layers = 42;
  s.dim = 3072;
  s.heads = 48;
  s.ffn_dim = 12288;
  s.frames = 13;
  s.grid_h = 30;
  s.grid_w = 45;
  s.text_tokens = 226;
  return s;
}

uint64_t transform_flops(const CostShape& shape, int kind, const TransformWork& work) {
  const uint64_t s = shape.sequence();
  const uint64_t d = shape.dim;
  switch (work.mode) {
    case TransformWork::Mode::kFull:
      return kind == 0 ? flops_attention(s, d, shape.heads) : flops_ffn(s, d, shape.ffn_dim);
    case TransformWork::Mode::kRefresh: {
      const uint64_t q = work.unified_queries + (work.text_queries ? shape.text_tokens : 0);
      if (q == 0) return 0;
      return kind == 0 ? flops_attention_masked(s, q, d) : flops_ffn(q, d, shape.ffn_dim);
    }
    case TransformWork::Mode::kExtrapolate:
      return flops_extrapolate(s, d);
    case TransformWork::Mode::kReuse:
      return 0;
  }
  return 0;
}

StepCost step_cost(const CostShape& shape, const StepWork& work) {
  StepCost cost;
  cost.per_layer.reserve(work.size());
  for (const auto& layer : work) {
    const uint64_t c = transform_flops(shape, 0, layer[0]) + transform_flops(shape, 1, layer[1]);
    cost.per_layer.push_back(c);
    cost.total += c;
  }
  return cost;
}

namespace {

StepWork uniform_work(int layers, TransformWork w) {
  return StepWork(layers, std::array<TransformWork, 2>{w, w});
}

}  // namespace

PolicyCost flops_policy_run(const CostShape& shape, const Policy& policy, int steps) {
  if (steps < 1) throw ContractError("steps T must be >= 1");
  PolicyCost cost;
  cost.policy = std::string(policy.name());
  const StepWork full = uniform_work(shape.layers, TransformWork{TransformWork::Mode::kFull, 0, true});
  const uint64_t full_step = step_cost(shape, full).total;
  cost.full_flops = full_step * static_cast<uint64_t>(steps);

  StepWork follower = full;
  if (policy.cached()) {
    const HeroConfig& hero = policy.hero;
    const int threshold = policy.threshold();
    HeroConfig check = hero;
    check.threshold = threshold;
    check.validate(shape.layers);
    uint64_t refreshed = 0;
    if (threshold > 1) {
      const PatchPartition part = partition_tokens(shape.frames, shape.grid_h, shape.grid_w,
                                                   hero.patch_h, hero.patch_w, hero.edges);
      for (const auto& p : part.patches) {
        refreshed += static_cast<uint64_t>(tokens_per_patch(hero.ratio, static_cast<int>(p.size())));
      }
    }
    const TransformWork deep{policy.kind == PolicyKind::kUniformReuse
                                 ? TransformWork::Mode::kReuse
                                 : TransformWork::Mode::kExtrapolate,
                             0, false};
    for (int l = 1; l <= shape.layers; ++l) {
      const TransformWork w = l < threshold
                                  ? TransformWork{TransformWork::Mode::kRefresh, refreshed,
                                                  hero.refresh_text()}
                                  : deep;
      follower[l - 1] = {w, w};
    }
  }
  const uint64_t follower_step = step_cost(shape, follower).total;

  std::vector<bool> anchor(steps + 1, true);
  if (policy.cached()) {
    for (const auto& g : build_schedule(steps, policy.hero.interval).groups) {
      for (int f : g.followers) anchor[f] = false;
    }
  }
  for (int p = 1; p <= steps; ++p) {
    const uint64_t c = anchor[p] ? full_step : follower_step;
    cost.per_step.push_back(c);
    cost.total_flops += c;
  }
  cost.speedup_vs_full = cost.total_flops == 0
                             ? 0.0
                             : static_cast<double>(cost.full_flops) / static_cast<double>(cost.total_flops);
  return cost;
}

}  // namespace hxr
