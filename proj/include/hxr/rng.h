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
#include <random>

namespace hxr {

// splitmix64 finalizer; derives independent stream seeds from (seed, tag).
uint64_t mix_seed(uint64_t seed, uint64_t tag);

template <typename... Tags>
uint64_t derive_seed(uint64_t seed, Tags... tags) {
  ((seed = mix_seed(seed, static_cast<uint64_t>(tags))), ...);
  return seed;
}

// Platform-stable generator. std::mt19937_64 output is fully specified by the
// standard; the std distributions are not, so conversions are done here.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hxr
