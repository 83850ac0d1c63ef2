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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hxr/analyzer.h"
#include "hxr/extrapolation.h"
#include "hxr/flops.h"
#include "hxr/patch_refresh.h"
#include "hxr/toy_mmdit.h"

namespace hxr {

// When shallow-layer followers recompute the text rows. kAuto recomputes them
// only when every unified token is refreshed (R = 1) and skips them otherwise.
enum class TextRefresh { kAuto, kSkip, kAlways };

// Base of deep-layer extrapolation: the anchor feature, or the estimate the
// previous follower produced for the same transform.
enum class ExtrapolationBase { kAnchor, kPrevious };

struct HeroConfig {
  int interval = 2;    // M: followers per anchor
  int threshold = 20;  // K: layers [1, K) refresh, [K, L] extrapolate
  double ratio = 0.2;  // R: refreshed fraction per patch
  int patch_h = 2;
  int patch_w = 3;
  int max_age = 0;  // A_max; 0 means 4 * interval
  uint64_t rng_seed = 0;
  TextRefresh text_refresh = TextRefresh::kAuto;
  ExtrapolationBase base = ExtrapolationBase::kAnchor;
  EdgeTiles edges = EdgeTiles::kRemainder;

  int effective_max_age() const { return max_age > 0 ? max_age : 4 * interval; }
  bool refresh_text() const;
  void validate(int layers) const;
};

enum class PolicyKind { kFull, kHero, kUniformReuse, kUniformExtrapolation };

std::string_view policy_name(PolicyKind kind);
std::optional<PolicyKind> parse_policy(std::string_view name);

struct Policy {
  PolicyKind kind = PolicyKind::kFull;
  HeroConfig hero;  // interval is used by every cached policy; the rest by kHero only

  static Policy full() { return Policy{}; }
  static Policy hero_policy(HeroConfig config) { return Policy{PolicyKind::kHero, config}; }
  static Policy uniform_reuse(int interval);
  static Policy uniform_extrapolation(int interval);

  std::string_view name() const { return policy_name(kind); }
  bool cached() const { return kind != PolicyKind::kFull; }
  // First layer served by extrapolation/reuse on follower steps.
  int threshold() const;
};

// Positions are 1-based denoising step positions; position p runs at
// timestep t = T - p + 1.
struct ScheduleGroup {
  int anchor = 0;
  std::vector<int> followers;
};

struct Schedule {
  int steps = 0;
  std::vector<ScheduleGroup> groups;

  int anchors() const { return static_cast<int>(groups.size()); }
};

// Greedy: anchor, then up to `interval` followers, repeated until T steps.
Schedule build_schedule(int steps, int interval);

struct CacheRecord {
  DeltaEntry entry;      // anchor G/H with deltas versus the previous anchor
  TransformOutput last;  // most recent G/H emitted for this transform
  int anchor_position = 0;
  bool valid = false;
};

// One record per (layer, transform kind).
class CacheStore {
 public:
  explicit CacheStore(int layers) : layers_(layers), records_(2 * static_cast<size_t>(layers)) {}

  int layers() const { return layers_; }
  CacheRecord& at(int layer, TransformKind kind);
  const CacheRecord& at(int layer, TransformKind kind) const;
  // Checked read for follower steps: valid and shaped like `state`.
  CacheRecord& read(int layer, TransformKind kind, const TokenState& state);
  bool all_valid() const;

 private:
  int layers_;
  std::vector<CacheRecord> records_;
};

enum class FeatureSource { kFull, kRefresh, kExtrapolate, kReuse };
std::string_view to_string(FeatureSource source);

// Emitted for every transform of every step, before the residual update.
struct FeatureEvent {
  int position = 0;
  int layer = 0;
  TransformKind kind = TransformKind::kFullAttn;
  FeatureSource source = FeatureSource::kFull;
  const TokenState* input = nullptr;
  const TransformOutput* output = nullptr;
};

using FeatureObserver = std::function<void(const FeatureEvent&)>;

struct StepTelemetry {
  StepWork work;
  int selected = 0;       // refreshed unified rows summed over shallow layers
  int forced = 0;         // of which forced by the age bound
  double mean_age = 0.0;  // after the step, averaged over shallow layers
};

struct StepHooks {
  StepTelemetry* telemetry = nullptr;
  const FeatureObserver* observer = nullptr;
};

// Selection state for the shallow layers of one run: a shared partition and
// an age tracker with its own random stream per layer.
class RefreshContext {
 public:
  RefreshContext(const ModelConfig& model, const HeroConfig& hero);

  const PatchPartition& partition() const { return partition_; }
  RefreshState& layer_state(int layer) { return states_.at(layer - 1); }
  const RefreshState& layer_state(int layer) const { return states_.at(layer - 1); }
  double ratio() const { return ratio_; }
  int max_age() const { return max_age_; }
  bool refresh_text() const { return refresh_text_; }
  void reset_ages();

 private:
  PatchPartition partition_;
  std::vector<RefreshState> states_;
  double ratio_;
  int max_age_;
  bool refresh_text_;
};

// Full compute of every layer; caches G/H, refreshes deltas against the
// previous anchor and applies the residual updates. The first anchor stores
// zero deltas with span interval + 1.
TokenState anchor_step(const DiffusionModel& model, CacheStore& cache, TokenState state,
                       int position, int interval, const StepHooks& hooks = {});

struct FollowerOptions {
  int threshold = 1;  // K
  bool use_slope = true;
  ExtrapolationBase base = ExtrapolationBase::kAnchor;
};

// Layers below the threshold refresh sampled tokens (needs `refresh`); the
// rest extrapolate from the cache, or reuse it when use_slope is false.
TokenState follower_step(const DiffusionModel& model, CacheStore& cache, RefreshContext* refresh,
                         TokenState state, int position, int k, const FollowerOptions& options,
                         const StepHooks& hooks = {});

struct RunOptions {
  float step_size = 0.1f;
  bool trace = false;
  FeatureObserver observer;
};

struct StepRecord {
  int position = 0;
  int timestep = 0;
  bool anchor = true;
  uint64_t flops = 0;
  int selected = 0;
  int forced = 0;
  double mean_age = 0.0;
};

struct RunResult {
  std::string policy;
  UnifiedLatent final_unified;
  LatentBundle final_latents;
  std::vector<StepRecord> steps;
  LayerTraces traces;
  uint64_t total_flops = 0;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

// Iterates x <- x - step_size * model(x, t) for t = T..1 under `policy`.
RunResult run_denoising(const DiffusionModel& model, const Policy& policy, int steps,
                        const LatentBundle& initial, const Tensor& text,
                        const RunOptions& options = {});

}  // namespace hxr
