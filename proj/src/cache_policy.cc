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

#include "hxr/cache_policy.h"

#include <chrono>
#include <string>

#include "hxr/error.h"

namespace hxr {
namespace {

constexpr uint64_t kSelectionStream = 3;

void notify(const StepHooks& hooks, int position, int layer, TransformKind kind,
            FeatureSource source, const TokenState& input, const TransformOutput& out) {
  if (hooks.observer && *hooks.observer) {
    (*hooks.observer)(FeatureEvent{position, layer, kind, source, &input, &out});
  }
}

void record_work(const StepHooks& hooks, int layer, TransformKind kind, TransformWork work) {
  if (!hooks.telemetry) return;
  auto& steps = hooks.telemetry->work;
  if (static_cast<int>(steps.size()) < layer) steps.resize(layer);
  steps[layer - 1][static_cast<int>(kind)] = work;
}

}  // namespace

bool HeroConfig::refresh_text() const {
  switch (text_refresh) {
    case TextRefresh::kAlways:
      return true;
    case TextRefresh::kSkip:
      return false;
    case TextRefresh::kAuto:
      break;
  }
  return ratio >= 1.0;
}

void HeroConfig::validate(int layers) const {
  if (interval < 1) throw ContractError("interval M must be >= 1, got " + std::to_string(interval));
  if (threshold < 1 || threshold > layers + 1) {
    throw ContractError("threshold K must lie in [1, " + std::to_string(layers + 1) + "], got " +
                        std::to_string(threshold));
  }
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ContractError("ratio R must lie in (0, 1], got " + std::to_string(ratio));
  }
  if (patch_h < 1 || patch_w < 1) throw ContractError("refresh patch sides must be >= 1");
  if (max_age < 0) throw ContractError("max_age must be >= 1 (or 0 for the default)");
}

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kFull:
      return "full";
    case PolicyKind::kHero:
      return "hero";
    case PolicyKind::kUniformReuse:
      return "uniform_reuse";
    case PolicyKind::kUniformExtrapolation:
      return "uniform_extrapolation";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (PolicyKind k : {PolicyKind::kFull, PolicyKind::kHero, PolicyKind::kUniformReuse,
                       PolicyKind::kUniformExtrapolation}) {
    if (policy_name(k) == name) return k;
  }
  return std::nullopt;
}

Policy Policy::uniform_reuse(int interval) {
  Policy p{PolicyKind::kUniformReuse, {}};
  p.hero.interval = interval;
  p.hero.threshold = 1;
  return p;
}

Policy Policy::uniform_extrapolation(int interval) {
  Policy p{PolicyKind::kUniformExtrapolation, {}};
  p.hero.interval = interval;
  p.hero.threshold = 1;
  return p;
}

int Policy::threshold() const { return kind == PolicyKind::kHero ? hero.threshold : 1; }

Schedule build_schedule(int steps, int interval) {
  if (steps < 1) throw ContractError("steps T must be >= 1");
  if (interval < 1) throw ContractError("interval M must be >= 1");
  Schedule s;
  s.steps = steps;
  for (int p = 1; p <= steps;) {
    ScheduleGroup g;
    g.anchor = p++;
    for (int k = 1; k <= interval && p <= steps; ++k) g.followers.push_back(p++);
    s.groups.push_back(std::move(g));
  }
  return s;
}

CacheRecord& CacheStore::at(int layer, TransformKind kind) {
  if (layer < 1 || layer > layers_) throw ContractError("cache layer out of range");
  return records_[2 * static_cast<size_t>(layer - 1) + static_cast<size_t>(kind)];
}

const CacheRecord& CacheStore::at(int layer, TransformKind kind) const {
  return const_cast<CacheStore*>(this)->at(layer, kind);
}

CacheRecord& CacheStore::read(int layer, TransformKind kind, const TokenState& state) {
  CacheRecord& rec = at(layer, kind);
  if (!rec.valid) {
    throw StateError("cache entry for layer " + std::to_string(layer) + " " +
                     std::string(to_string(kind)) + " is empty; run an anchor step first");
  }
  if (!rec.entry.g_anchor.same_shape(state.z) || !rec.entry.h_anchor.same_shape(state.tau) ||
      !rec.entry.dg.same_shape(state.z) || !rec.entry.dh.same_shape(state.tau)) {
    throw StructuralError("cache entry for layer " + std::to_string(layer) + " " +
                          std::string(to_string(kind)) + " does not match the token state");
  }
  return rec;
}

bool CacheStore::all_valid() const {
  for (const auto& r : records_) {
    if (!r.valid) return false;
  }
  return true;
}

std::string_view to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::kFull:
      return "full";
    case FeatureSource::kRefresh:
      return "refresh";
    case FeatureSource::kExtrapolate:
      return "extrapolate";
    case FeatureSource::kReuse:
      return "reuse";
  }
  return "unknown";
}

RefreshContext::RefreshContext(const ModelConfig& model, const HeroConfig& hero)
    : partition_(partition_tokens(model.frames, model.grid_h(), model.grid_w(), hero.patch_h,
                                  hero.patch_w, hero.edges)),
      ratio_(hero.ratio),
      max_age_(hero.effective_max_age()),
      refresh_text_(hero.refresh_text()) {
  const int shallow = std::max(0, std::min(hero.threshold - 1, model.layers));
  states_.reserve(shallow);
  for (int l = 1; l <= shallow; ++l) {
    states_.emplace_back(partition_.tokens,
                         derive_seed(hero.rng_seed, kSelectionStream, static_cast<uint64_t>(l)));
  }
}

void RefreshContext::reset_ages() {
  for (auto& s : states_) s.reset_ages();
}

TokenState anchor_step(const DiffusionModel& model, CacheStore& cache, TokenState state,
                       int position, int interval, const StepHooks& hooks) {
  if (cache.layers() != model.config().layers) throw StructuralError("cache layer count mismatch");
  for (int l = 1; l <= model.config().layers; ++l) {
    for (TransformKind kind : kTransformOrder) {
      TransformOutput out = layer_transform(model, state, l, kind);
      notify(hooks, position, l, kind, FeatureSource::kFull, state, out);
      record_work(hooks, l, kind, TransformWork{TransformWork::Mode::kFull, 0, true});
      CacheRecord& rec = cache.at(l, kind);
      DeltaEntry& e = rec.entry;
      if (rec.valid && rec.anchor_position < position) {
        e.dg = cache_delta(out.g, e.g_anchor);
        e.dh = cache_delta(out.h, e.h_anchor);
        e.span = position - rec.anchor_position;
      } else {
        e.dg = Tensor(out.g.shape());
        e.dh = Tensor(out.h.shape());
        e.span = interval + 1;
      }
      e.g_anchor = out.g;
      e.h_anchor = out.h;
      rec.anchor_position = position;
      rec.valid = true;
      residual_update_in_place(state, out.g, out.h);
      rec.last = std::move(out);
    }
    state.layer = l + 1;
  }
  return state;
}

TokenState follower_step(const DiffusionModel& model, CacheStore& cache, RefreshContext* refresh,
                         TokenState state, int position, int k, const FollowerOptions& options,
                         const StepHooks& hooks) {
  const int layers = model.config().layers;
  const int shallow_end = std::min(options.threshold, layers + 1);
  if (shallow_end > 1 && refresh == nullptr) {
    throw StateError("follower step with refreshed layers needs a refresh context");
  }
  if (k < 1) throw ContractError("follower offset k must be >= 1");
  int selected = 0;
  int forced = 0;
  double age_sum = 0.0;
  for (int l = 1; l <= layers; ++l) {
    if (l < shallow_end) {
      RefreshState& rs = refresh->layer_state(l);
      const SelectionMask mask =
          select_tokens(refresh->partition(), rs, refresh->ratio(), refresh->max_age());
      const bool text = refresh->refresh_text();
      for (TransformKind kind : kTransformOrder) {
        const CacheRecord& rec = cache.read(l, kind, state);
        TransformOutput out = refresh_features(model, l, kind, state, mask, rec.entry.g_anchor,
                                               rec.entry.h_anchor, text);
        notify(hooks, position, l, kind, FeatureSource::kRefresh, state, out);
        record_work(hooks, l, kind,
                    TransformWork{TransformWork::Mode::kRefresh,
                                  static_cast<uint64_t>(mask.count()), text});
        residual_update_in_place(state, out.g, out.h);
      }
      update_ages(rs, mask);
      selected += mask.count();
      forced += mask.forced;
      age_sum += rs.mean_age();
    } else {
      for (TransformKind kind : kTransformOrder) {
        CacheRecord& rec = cache.read(l, kind, state);
        if (k > rec.entry.span) {
          throw ContractError("follower offset " + std::to_string(k) + " exceeds anchor span " +
                              std::to_string(rec.entry.span));
        }
        TransformOutput out;
        FeatureSource source = FeatureSource::kExtrapolate;
        TransformWork::Mode mode = TransformWork::Mode::kExtrapolate;
        if (!options.use_slope) {
          out = extrapolate(rec.entry, 0);
          source = FeatureSource::kReuse;
          mode = TransformWork::Mode::kReuse;
        } else if (options.base == ExtrapolationBase::kPrevious) {
          out = extrapolate_from(rec.last, rec.entry, k);
        } else {
          out = extrapolate(rec.entry, k);
        }
        notify(hooks, position, l, kind, source, state, out);
        record_work(hooks, l, kind, TransformWork{mode, 0, false});
        residual_update_in_place(state, out.g, out.h);
        rec.last = std::move(out);
      }
    }
    state.layer = l + 1;
  }
  if (hooks.telemetry) {
    hooks.telemetry->selected = selected;
    hooks.telemetry->forced = forced;
    hooks.telemetry->mean_age = shallow_end > 1 ? age_sum / (shallow_end - 1) : 0.0;
  }
  return state;
}

namespace {

void apply_update(UnifiedLatent& x, const UnifiedLatent& out, float step_size) {
  require_same_shape(x.z, out.z, "denoising update");
  auto xv = x.z.data();
  auto ov = out.z.data();
  for (size_t i = 0; i < xv.size(); ++i) xv[i] -= step_size * ov[i];
}

// Uncached step with the same operation order as full_forward.
UnifiedLatent full_step(const DiffusionModel& model, const UnifiedLatent& x, const Tensor& text,
                        int t, int position, const StepHooks& hooks) {
  TokenState state = model.embed(x, text, t);
  for (int l = 1; l <= model.config().layers; ++l) {
    for (TransformKind kind : kTransformOrder) {
      TransformOutput out = layer_transform(model, state, l, kind);
      notify(hooks, position, l, kind, FeatureSource::kFull, state, out);
      record_work(hooks, l, kind, TransformWork{TransformWork::Mode::kFull, 0, true});
      residual_update_in_place(state, out.g, out.h);
    }
    state.layer = l + 1;
  }
  return model.unembed(state.z);
}

}  // namespace

RunResult run_denoising(const DiffusionModel& model, const Policy& policy, int steps,
                        const LatentBundle& initial, const Tensor& text,
                        const RunOptions& options) {
  const ModelConfig& mc = model.config();
  if (steps < 1) throw ContractError("steps T must be >= 1");
  if (policy.cached()) {
    HeroConfig check = policy.hero;
    check.threshold = policy.threshold();
    check.validate(mc.layers);
  }
  const auto started = std::chrono::steady_clock::now();

  RunResult result;
  result.policy = std::string(policy.name());
  UnifiedLatent x = concat_modalities(initial);
  const CostShape shape = CostShape::from_model(mc);

  TraceRecorder recorder(mc.layers, mc.dim);
  const bool tracing = options.trace;
  if (tracing && policy.kind != PolicyKind::kFull) {
    result.warnings.push_back("traces recorded under policy '" + result.policy +
                              "' reflect approximated features");
  }
  // Per-layer G_attn + G_ffn are summed into the trace for the step.
  FeatureObserver observer = [&](const FeatureEvent& ev) {
    if (tracing) recorder.add(ev.layer, ev.output->g);
    if (options.observer) options.observer(ev);
  };

  // Positions run 1..T; position p denoises at timestep T - p + 1.
  std::vector<int> role(steps + 1, 0);  // 0 anchor, k > 0 follower offset
  if (policy.cached()) {
    for (const auto& g : build_schedule(steps, policy.hero.interval).groups) {
      for (size_t i = 0; i < g.followers.size(); ++i) role[g.followers[i]] = static_cast<int>(i) + 1;
    }
  }

  CacheStore cache(mc.layers);
  std::optional<RefreshContext> refresh;
  FollowerOptions follow;
  if (policy.cached()) {
    follow.threshold = policy.threshold();
    follow.use_slope = policy.kind != PolicyKind::kUniformReuse;
    follow.base = policy.kind == PolicyKind::kHero ? policy.hero.base : ExtrapolationBase::kAnchor;
    if (follow.threshold > 1) refresh.emplace(mc, policy.hero);
  }

  for (int p = 1; p <= steps; ++p) {
    const int t = steps - p + 1;
    StepTelemetry telemetry;
    StepHooks hooks{&telemetry, &observer};
    if (tracing) recorder.begin_step();
    UnifiedLatent out;
    if (!policy.cached()) {
      out = full_step(model, x, text, t, p, hooks);
    } else {
      TokenState state = model.embed(x, text, t);
      if (role[p] == 0) {
        state = anchor_step(model, cache, std::move(state), p, policy.hero.interval, hooks);
        if (refresh) refresh->reset_ages();
      } else {
        state = follower_step(model, cache, refresh ? &*refresh : nullptr, std::move(state), p,
                              role[p], follow, hooks);
      }
      out = model.unembed(state.z);
    }
    apply_update(x, out, options.step_size);

    StepRecord rec;
    rec.position = p;
    rec.timestep = t;
    rec.anchor = role[p] == 0;
    rec.flops = step_cost(shape, telemetry.work).total;
    rec.selected = telemetry.selected;
    rec.forced = telemetry.forced;
    rec.mean_age = telemetry.mean_age;
    result.total_flops += rec.flops;
    result.steps.push_back(rec);
  }
  if (!x.z.all_finite()) throw NumericError("denoising produced non-finite latents");
  result.final_latents =
      split_modalities(x, mc.video_channels, mc.depth_channels, mc.camera_channels);
  result.final_unified = std::move(x);
  if (tracing) result.traces = recorder.take();
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace hxr
