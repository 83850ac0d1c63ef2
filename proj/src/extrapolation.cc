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

#include "hxr/extrapolation.h"

#include <string>

#include "hxr/error.h"

namespace hxr {

Tensor cache_delta(const Tensor& current, const Tensor& previous_anchor) {
  require_same_shape(current, previous_anchor, "cache_delta");
  Tensor out = current;
  auto o = out.data();
  auto p = previous_anchor.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] -= p[i];
  return out;
}

Tensor extrapolate_tensor(const Tensor& base, const Tensor& delta, int k, int span) {
  require_same_shape(base, delta, "extrapolate");
  const float step = static_cast<float>(k) / static_cast<float>(span);
  Tensor out = base;
  if (k == 0) return out;
  auto o = out.data();
  auto d = delta.data();
  for (size_t i = 0; i < o.size(); ++i) o[i] += d[i] * step;
  return out;
}

namespace {

void check_offset(const DeltaEntry& entry, int k) {
  if (entry.span < 1) throw ContractError("delta span must be >= 1");
  if (k < 0 || k > entry.span) {
    throw ContractError("extrapolation offset " + std::to_string(k) + " outside [0, " +
                        std::to_string(entry.span) + "]");
  }
}

}  // namespace

TransformOutput extrapolate(const DeltaEntry& entry, int k) {
  check_offset(entry, k);
  return TransformOutput{extrapolate_tensor(entry.g_anchor, entry.dg, k, entry.span),
                         extrapolate_tensor(entry.h_anchor, entry.dh, k, entry.span)};
}

TransformOutput extrapolate_from(const TransformOutput& base, const DeltaEntry& entry, int k) {
  check_offset(entry, k);
  return TransformOutput{extrapolate_tensor(base.g, entry.dg, k, entry.span),
                         extrapolate_tensor(base.h, entry.dh, k, entry.span)};
}

}  // namespace hxr
