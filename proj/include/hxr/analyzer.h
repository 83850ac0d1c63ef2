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
#include <span>
#include <string>
#include <vector>

#include "hxr/tensor.h"

namespace hxr {

// One feature summary vector per recorded step, [step][dim].
using FeatureTrace = std::vector<std::vector<float>>;

// Per layer, the per-step mean over unified tokens of the layer's summed
// transform outputs (G_attn + G_ffn). Indexed [layer - 1][step][dim].
struct LayerTraces {
  std::vector<FeatureTrace> layers;

  bool empty() const { return layers.empty(); }
  size_t steps() const { return layers.empty() ? 0 : layers.front().size(); }
};

// Accumulates mean-pooled transform outputs into LayerTraces while a run
// executes.
class TraceRecorder {
 public:
  TraceRecorder(int layers, int dim) : layers_(layers), dim_(dim) {
    traces_.layers.resize(layers);
  }

  void begin_step();
  // Adds the token-mean of `g` ([tokens, dim]) to the current step of `layer`.
  void add(int layer, const Tensor& g);

  const LayerTraces& traces() const { return traces_; }
  LayerTraces take() { return std::move(traces_); }

 private:
  int layers_;
  int dim_;
  LayerTraces traces_;
};

// Population variance of the second finite differences x[t+2] - 2x[t+1] + x[t],
// taken per feature dimension and averaged over dimensions. Needs >= 3 steps.
double second_order_variance(const FeatureTrace& trace);

struct StabilityScores {
  std::vector<double> variance;
  std::vector<double> score;  // 1 = most stable, 0 = least stable
};

// s_l = 1 - (v_l - min v) / (max v - min v); all ones when every v is equal.
StabilityScores stability_scores(std::span<const double> variances);

StabilityScores analyze_traces(const LayerTraces& traces);

// Layer indices (1-based) ordered from most to least stable.
std::vector<int> rank_by_stability(const StabilityScores& scores);

// CSV with header "layer,step,f0,...,f{d-1}"; layers and steps 1-based.
void write_traces_csv(std::ostream& out, const LayerTraces& traces);
LayerTraces read_traces_csv(std::istream& in);
// CSV with header "layer,variance,score".
void write_stability_csv(std::ostream& out, const StabilityScores& scores);

}  // namespace hxr
