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
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hxr/cache_policy.h"
#include "hxr/toy_mmdit.h"

namespace hxr {

// Run configuration. Text format, one setting per line:
//
//   # comment
//   [model]
//   layers = 6
//   noise_layers = 1, 2
//   [hero]
//   ratio = 0.2
//   [run]
//   policy = hero
//
// A key may also be written fully qualified ("hero.ratio = 0.2") outside or
// inside any section. Keys are case sensitive; unknown keys and repeated keys
// are errors. See configs/ for complete files.
struct RunConfig {
  ModelConfig model;
  HeroConfig hero = toy_hero();
  std::string policy = "hero";
  int steps = 12;
  uint64_t seed = 0;  // initial latents and text embeddings
  int seeds = 1;      // number of consecutive seeds for sweep/compare
  float step_size = 0.1f;
  bool trace = false;
  std::string out_dir = "out";

  Policy make_policy() const;
  // Validates every sub-config; throws ConfigError naming the offending key.
  void validate() const;
  // Sets model.seed, hero.rng_seed and run.seed together.
  void set_seed(uint64_t value);

  // HERO defaults scaled to the 6-layer default model.
  static HeroConfig toy_hero() {
    HeroConfig h;
    h.threshold = 4;
    return h;
  }
};

RunConfig parse_config(std::istream& in, std::string_view source = "<config>");
RunConfig load_config(const std::string& path);
// Applies one "section.key = value" assignment, e.g. from a command line.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
// Canonical text form; parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const RunConfig& config);

// Names of every accepted fully qualified key, in canonical order.
std::vector<std::string> config_keys();

std::string_view to_string(TextRefresh mode);
std::string_view to_string(ExtrapolationBase base);
std::string_view to_string(EdgeTiles edges);

}  // namespace hxr
