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

#include "hxr/tensor.h"
#include "hxr/toy_mmdit.h"

namespace hxr {

// Cached anchor features and their anchor-to-anchor differences. `span` is the
// number of denoising steps between the two anchors the delta was taken over.
struct DeltaEntry {
  Tensor g_anchor;
  Tensor h_anchor;
  Tensor dg;
  Tensor dh;
  int span = 1;
};

// current - previous_anchor, elementwise.
Tensor cache_delta(const Tensor& current, const Tensor& previous_anchor);

// base + delta * k / span, elementwise.
Tensor extrapolate_tensor(const Tensor& base, const Tensor& delta, int k, int span);

// G_anchor + dG * k / span (and likewise for H), for 0 <= k <= span.
TransformOutput extrapolate(const DeltaEntry& entry, int k);

// Same slope, but continuing from an explicit base (e.g. the previous
// follower's estimate) instead of the anchor value.
TransformOutput extrapolate_from(const TransformOutput& base, const DeltaEntry& entry, int k);

}  // namespace hxr
