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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hxr {

struct ModelConfig;
struct HeroConfig;
struct Policy;

// All counts are FLOPs = 2 x multiply-accumulates of the matmuls inside
// FullAttn and FFN. Norms, softmax, activations, patch embedding and
// unpatchify are not counted. Extrapolation charges one multiply and one add
// per element of each produced feature tensor.
inline constexpr std::string_view kFlopConvention =
    "flops = 2*MAC over attention/FFN matmuls; masked attention charges Q/O "
    "projections and score/weighted-sum terms for selected queries only and "
    "K/V projections for all tokens; extrapolation charges 2 flops per "
    "output element; norms/softmax/activations/embedding excluded";

// Full joint attention over s tokens: Q,K,V,O projections plus scores and
// weighted sum. Independent of the head count.
uint64_t flops_attention(uint64_t seq, uint64_t dim, uint64_t heads);
// Position-wise FFN on `tokens` rows: two matmuls through the hidden layer.
uint64_t flops_ffn(uint64_t tokens, uint64_t dim, uint64_t ffn_dim);
// Attention in which only `queries` of the `seq` tokens issue queries.
uint64_t flops_attention_masked(uint64_t seq, uint64_t queries, uint64_t dim);
uint64_t flops_extrapolate(uint64_t rows, uint64_t dim);

// What one transform did during a step.
struct TransformWork {
  enum class Mode { kFull, kRefresh, kExtrapolate, kReuse };
  Mode mode = Mode::kFull;
  uint64_t unified_queries = 0;  // refreshed unified rows (kRefresh)
  bool text_queries = false;     // text rows recomputed too (kRefresh)
};

struct CostShape {
  int layers = 0;
  uint64_t dim = 0;
  uint64_t heads = 1;
  uint64_t ffn_dim = 0;
  int frames = 0;
  int grid_h = 0;
  int grid_w = 0;
  uint64_t text_tokens = 0;

  uint64_t unified_tokens() const {
    return static_cast<uint64_t>(frames) * grid_h * grid_w;
  }
  uint64_t sequence() const { return unified_tokens() + text_tokens; }

  static CostShape from_model(const ModelConfig& config);
  // CogVideoX-5B-sized transformer on a 13x60x90 latent with 2x2 patches.
  static CostShape cogvideox_5b();
};

// Work of a step, indexed [layer][kind] with kind 0 = FullAttn, 1 = FFN.
using StepWork = std::vector<std::array<TransformWork, 2>>;

uint64_t transform_flops(const CostShape& shape, int kind, const TransformWork& work);

struct StepCost {
  std::vector<uint64_t> per_layer;
  uint64_t total = 0;
};

StepCost step_cost(const CostShape& shape, const StepWork& work);

struct PolicyCost {
  std::string policy;
  std::vector<uint64_t> per_step;
  uint64_t total_flops = 0;
  uint64_t full_flops = 0;
  double speedup_vs_full = 1.0;
};

// Analytic cost of running `policy` for `steps` denoising steps, using the
// nominal per-patch refresh counts (no forced over-age selections).
PolicyCost flops_policy_run(const CostShape& shape, const Policy& policy, int steps);

}  // namespace hxr
