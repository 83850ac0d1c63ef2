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

#include "hxr/patch_refresh.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hxr/error.h"

namespace hxr {

PatchPartition partition_tokens(int frames, int grid_h, int grid_w, int patch_h, int patch_w,
                                EdgeTiles edges) {
  if (frames < 1 || grid_h < 1 || grid_w < 1) throw StructuralError("token grid must be non-empty");
  if (patch_h < 1 || patch_w < 1) throw StructuralError("patch sides must be >= 1");
  if (edges == EdgeTiles::kReject && (grid_h % patch_h != 0 || grid_w % patch_w != 0)) {
    throw StructuralError("token grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w) +
                          " not divisible by patch " + std::to_string(patch_h) + "x" +
                          std::to_string(patch_w));
  }
  PatchPartition part;
  part.tokens = frames * grid_h * grid_w;
  for (int f = 0; f < frames; ++f) {
    for (int y0 = 0; y0 < grid_h; y0 += patch_h) {
      for (int x0 = 0; x0 < grid_w; x0 += patch_w) {
        std::vector<int32_t> patch;
        for (int y = y0; y < std::min(y0 + patch_h, grid_h); ++y) {
          for (int x = x0; x < std::min(x0 + patch_w, grid_w); ++x) {
            patch.push_back((f * grid_h + y) * grid_w + x);
          }
        }
        part.patches.push_back(std::move(patch));
      }
    }
  }
  return part;
}

int tokens_per_patch(double ratio, int patch_size) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ContractError("sample ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
  // The epsilon keeps products such as 0.5 * 3 = 1.5 on the rounding boundary
  // from falling below it.
  const int n = static_cast<int>(std::floor(ratio * patch_size + 0.5 + 1e-9));
  return std::clamp(n, 1, patch_size);
}

int32_t RefreshState::max_age() const {
  return age.empty() ? 0 : *std::max_element(age.begin(), age.end());
}

double RefreshState::mean_age() const {
  if (age.empty()) return 0.0;
  return std::accumulate(age.begin(), age.end(), 0.0) / static_cast<double>(age.size());
}

int SelectionMask::count() const {
  return static_cast<int>(std::count(selected.begin(), selected.end(), uint8_t{1}));
}

std::vector<int32_t> SelectionMask::rows() const {
  std::vector<int32_t> out;
  for (size_t i = 0; i < selected.size(); ++i) {
    if (selected[i]) out.push_back(static_cast<int32_t>(i));
  }
  return out;
}

SelectionMask SelectionMask::all(int tokens) {
  return SelectionMask{std::vector<uint8_t>(tokens, 1), 0};
}

SelectionMask select_tokens(const PatchPartition& partition, RefreshState& state, double ratio,
                            int max_age) {
  if (static_cast<int>(state.age.size()) != partition.tokens) {
    throw StructuralError("refresh state tracks " + std::to_string(state.age.size()) +
                          " tokens, partition has " + std::to_string(partition.tokens));
  }
  if (max_age < 1) throw ContractError("max_age must be >= 1");
  SelectionMask mask{std::vector<uint8_t>(partition.tokens, 0), 0};
  std::vector<int32_t> candidates;
  std::vector<double> weights;
  for (const auto& patch : partition.patches) {
    candidates.clear();
    weights.clear();
    for (int32_t tok : patch) {
      if (state.age[tok] >= max_age) {
        mask.selected[tok] = 1;
        ++mask.forced;
      } else {
        candidates.push_back(tok);
        weights.push_back(1.0 + state.age[tok]);
      }
    }
    int draws = std::min<int>(tokens_per_patch(ratio, static_cast<int>(patch.size())),
                              static_cast<int>(candidates.size()));
    // Sequential weighted draws without replacement.
    for (; draws > 0; --draws) {
      const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
      double u = state.rng.uniform() * total;
      size_t pick = 0;
      while (pick + 1 < weights.size() && u >= weights[pick]) {
        u -= weights[pick];
        ++pick;
      }
      mask.selected[candidates[pick]] = 1;
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
      weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  return mask;
}

void update_ages(RefreshState& state, const SelectionMask& mask) {
  if (mask.selected.size() != state.age.size()) {
    throw StructuralError("selection mask size does not match refresh state");
  }
  for (size_t i = 0; i < state.age.size(); ++i) {
    state.age[i] = mask.selected[i] ? 0 : state.age[i] + 1;
  }
}

TransformOutput refresh_features(const DiffusionModel& model, int layer, TransformKind kind,
                                 const TokenState& state, const SelectionMask& mask,
                                 const Tensor& cached_g, const Tensor& cached_h,
                                 bool refresh_text) {
  require_same_shape(cached_g, state.z, "refresh_features cached G");
  require_same_shape(cached_h, state.tau, "refresh_features cached H");
  if (static_cast<int64_t>(mask.selected.size()) != state.z.rows()) {
    throw StructuralError("selection mask covers " + std::to_string(mask.selected.size()) +
                          " tokens, state has " + std::to_string(state.z.rows()));
  }
  require_same_shape(cached_g, state.z, "cached G");
  require_same_shape(cached_h, state.tau, "cached H");
  const int selected = mask.count();
  const bool all_rows = selected == static_cast<int>(mask.selected.size());
  TransformOutput out;
  if (selected == 0 && !refresh_text) {
    return TransformOutput{cached_g, cached_h};
  }
  QuerySet queries = all_rows ? QuerySet{{}, true, refresh_text}
                              : QuerySet::subset(mask.rows(), refresh_text);
  TransformOutput fresh = model.transform(state, layer, kind, queries);
  if (all_rows) {
    out.g = std::move(fresh.g);
  } else {
    out.g = cached_g;
    for (size_t i = 0; i < queries.rows.size(); ++i) {
      auto src = fresh.g.row(static_cast<int64_t>(i));
      std::copy(src.begin(), src.end(), out.g.row(queries.rows[i]).begin());
    }
  }
  out.h = refresh_text ? std::move(fresh.h) : cached_h;
  return out;
}

}  // namespace hxr
