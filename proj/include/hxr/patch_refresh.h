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
#include <vector>

#include "hxr/rng.h"
#include "hxr/tensor.h"
#include "hxr/toy_mmdit.h"

namespace hxr {

// Non-overlapping spatial tiles of the [f, h', w'] token grid, one set of
// token indices per tile.
struct PatchPartition {
  std::vector<std::vector<int32_t>> patches;
  int tokens = 0;

  size_t size() const { return patches.size(); }
};

// How to tile a grid whose sides are not multiples of the patch sides.
enum class EdgeTiles { kReject, kRemainder };

// Tiles are row-major per frame, frames in order; tokens inside a tile are
// row-major too. With kRemainder, edge tiles shrink to the leftover rows/cols.
PatchPartition partition_tokens(int frames, int grid_h, int grid_w, int patch_h, int patch_w,
                                EdgeTiles edges = EdgeTiles::kReject);

// Tokens refreshed per patch: R * size rounded half-up, at least 1.
int tokens_per_patch(double ratio, int patch_size);

struct RefreshState {
  std::vector<int32_t> age;  // follower steps since the token was last recomputed
  Rng rng;

  RefreshState(int tokens, uint64_t seed) : age(tokens, 0), rng(seed) {}
  void reset_ages() { std::fill(age.begin(), age.end(), 0); }
  int32_t max_age() const;
  double mean_age() const;
};

struct SelectionMask {
  std::vector<uint8_t> selected;
  int forced = 0;  // tokens selected because they reached the age bound

  int count() const;
  std::vector<int32_t> rows() const;  // ascending
  static SelectionMask all(int tokens);
};

// Per patch: force-select every token with age >= max_age, then draw
// tokens_per_patch(R, |P|) more from the rest without replacement, weighting
// each token by (1 + age).
SelectionMask select_tokens(const PatchPartition& partition, RefreshState& state, double ratio,
                            int max_age);

// Selected tokens to age 0, the rest age + 1.
void update_ages(RefreshState& state, const SelectionMask& mask);

// Recomputes the transform for the selected unified tokens and reuses the
// cached rows everywhere else. Selected tokens query the full current token
// set. Text rows are recomputed only when `refresh_text` is set; otherwise H
// is the cached H.
TransformOutput refresh_features(const DiffusionModel& model, int layer, TransformKind kind,
                                 const TokenState& state, const SelectionMask& mask,
                                 const Tensor& cached_g, const Tensor& cached_h,
                                 bool refresh_text);

}  // namespace hxr
