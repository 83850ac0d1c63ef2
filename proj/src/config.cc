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

#include "hxr/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "hxr/error.h"

namespace hxr {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

int parse_int(std::string_view key, std::string_view text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

uint64_t parse_u64(std::string_view key, std::string_view text) {
  uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key),
                      "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

double parse_double(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(std::string(key), "expected true/false, got '" + std::string(text) + "'");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : comma - start));
    out.push_back(parse_int(key, item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Shortest round-trip form of either width.
template <typename T>
std::string format_number(T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename Enum, size_t N>
Enum parse_enum(std::string_view key, std::string_view text,
                const std::pair<std::string_view, Enum> (&names)[N]) {
  for (const auto& [name, value] : names) {
    if (name == text) return value;
  }
  std::string options;
  for (const auto& [name, value] : names) options += (options.empty() ? "" : ", ") + std::string(name);
  throw ConfigError(std::string(key),
                    "unknown value '" + std::string(text) + "' (expected one of " + options + ")");
}

constexpr std::pair<std::string_view, TextRefresh> kTextRefreshNames[] = {
    {"auto", TextRefresh::kAuto}, {"skip", TextRefresh::kSkip}, {"always", TextRefresh::kAlways}};
constexpr std::pair<std::string_view, ExtrapolationBase> kBaseNames[] = {
    {"anchor", ExtrapolationBase::kAnchor}, {"previous", ExtrapolationBase::kPrevious}};
constexpr std::pair<std::string_view, EdgeTiles> kEdgeNames[] = {
    {"remainder", EdgeTiles::kRemainder}, {"reject", EdgeTiles::kReject}};

template <typename Enum, size_t N>
std::string_view enum_name(Enum value, const std::pair<std::string_view, Enum> (&names)[N]) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "unknown";
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define HXR_INT_FIELD(name, member)                                                       \
  Field {                                                                                 \
    name, [](RunConfig& c, std::string_view k, std::string_view v) {                     \
      c.member = parse_int(k, v);                                                         \
    },                                                                                    \
        [](const RunConfig& c) { return std::to_string(c.member); }                       \
  }
#define HXR_U64_FIELD(name, member)                                                       \
  Field {                                                                                 \
    name, [](RunConfig& c, std::string_view k, std::string_view v) {                     \
      c.member = parse_u64(k, v);                                                         \
    },                                                                                    \
        [](const RunConfig& c) { return std::to_string(c.member); }                       \
  }
#define HXR_BOOL_FIELD(name, member)                                                      \
  Field {                                                                                 \
    name, [](RunConfig& c, std::string_view k, std::string_view v) {                     \
      c.member = parse_bool(k, v);                                                        \
    },                                                                                    \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }       \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      HXR_INT_FIELD("model.layers", model.layers),
      HXR_INT_FIELD("model.dim", model.dim),
      HXR_INT_FIELD("model.heads", model.heads),
      HXR_INT_FIELD("model.ffn_dim", model.ffn_dim),
      HXR_INT_FIELD("model.frames", model.frames),
      HXR_INT_FIELD("model.height", model.height),
      HXR_INT_FIELD("model.width", model.width),
      HXR_INT_FIELD("model.video_channels", model.video_channels),
      HXR_INT_FIELD("model.depth_channels", model.depth_channels),
      HXR_INT_FIELD("model.camera_channels", model.camera_channels),
      HXR_INT_FIELD("model.embed_h", model.embed_h),
      HXR_INT_FIELD("model.embed_w", model.embed_w),
      HXR_INT_FIELD("model.text_tokens", model.text_tokens),
      HXR_INT_FIELD("model.text_dim", model.text_dim),
      HXR_U64_FIELD("model.seed", model.seed),
      HXR_BOOL_FIELD("model.positional_encoding", model.positional_encoding),
      HXR_BOOL_FIELD("model.time_embedding", model.time_embedding),
      Field{"model.noise_layers",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.model.noise_layers = parse_int_list(k, v);
            },
            [](const RunConfig& c) {
              std::string out;
              for (int l : c.model.noise_layers) {
                out += (out.empty() ? "" : ", ") + std::to_string(l);
              }
              return out;
            }},
      Field{"model.noise_sigma",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.model.noise_sigma = static_cast<float>(parse_double(k, v));
            },
            [](const RunConfig& c) { return format_number(c.model.noise_sigma); }},
      HXR_U64_FIELD("model.noise_seed", model.noise_seed),

      HXR_INT_FIELD("hero.interval", hero.interval),
      HXR_INT_FIELD("hero.threshold", hero.threshold),
      Field{"hero.ratio",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.hero.ratio = parse_double(k, v);
            },
            [](const RunConfig& c) { return format_number(c.hero.ratio); }},
      HXR_INT_FIELD("hero.patch_h", hero.patch_h),
      HXR_INT_FIELD("hero.patch_w", hero.patch_w),
      HXR_INT_FIELD("hero.max_age", hero.max_age),
      HXR_U64_FIELD("hero.rng_seed", hero.rng_seed),
      Field{"hero.text_refresh",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.hero.text_refresh = parse_enum(k, v, kTextRefreshNames);
            },
            [](const RunConfig& c) { return std::string(to_string(c.hero.text_refresh)); }},
      Field{"hero.base",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.hero.base = parse_enum(k, v, kBaseNames);
            },
            [](const RunConfig& c) { return std::string(to_string(c.hero.base)); }},
      Field{"hero.edges",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.hero.edges = parse_enum(k, v, kEdgeNames);
            },
            [](const RunConfig& c) { return std::string(to_string(c.hero.edges)); }},

      Field{"run.policy",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              if (!parse_policy(v)) {
                throw ConfigError(std::string(k), "unknown policy '" + std::string(v) +
                                                      "' (expected full, hero, uniform_reuse "
                                                      "or uniform_extrapolation)");
              }
              c.policy = std::string(v);
            },
            [](const RunConfig& c) { return c.policy; }},
      HXR_INT_FIELD("run.steps", steps),
      HXR_U64_FIELD("run.seed", seed),
      HXR_INT_FIELD("run.seeds", seeds),
      Field{"run.step_size",
            [](RunConfig& c, std::string_view k, std::string_view v) {
              c.step_size = static_cast<float>(parse_double(k, v));
            },
            [](const RunConfig& c) { return format_number(c.step_size); }},
      HXR_BOOL_FIELD("run.trace", trace),
      Field{"run.out", [](RunConfig& c, std::string_view,
                          std::string_view v) { c.out_dir = std::string(v); },
            [](const RunConfig& c) { return c.out_dir; }},
  };
  return table;
}

#undef HXR_INT_FIELD
#undef HXR_U64_FIELD
#undef HXR_BOOL_FIELD

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(std::string(key), "unknown key");
}

void require(bool ok, const char* key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

}  // namespace

std::string_view to_string(TextRefresh mode) { return enum_name(mode, kTextRefreshNames); }
std::string_view to_string(ExtrapolationBase base) { return enum_name(base, kBaseNames); }
std::string_view to_string(EdgeTiles edges) { return enum_name(edges, kEdgeNames); }

Policy RunConfig::make_policy() const {
  const auto kind = parse_policy(policy);
  if (!kind) throw ConfigError("run.policy", "unknown policy '" + policy + "'");
  switch (*kind) {
    case PolicyKind::kFull:
      return Policy::full();
    case PolicyKind::kHero:
      return Policy::hero_policy(hero);
    case PolicyKind::kUniformReuse:
      return Policy::uniform_reuse(hero.interval);
    case PolicyKind::kUniformExtrapolation:
      return Policy::uniform_extrapolation(hero.interval);
  }
  return Policy::full();
}

void RunConfig::validate() const {
  const ModelConfig& m = model;
  require(m.layers >= 0, "model.layers", "must be >= 0");
  require(m.dim > 0, "model.dim", "must be > 0");
  require(m.heads > 0 && m.dim % m.heads == 0, "model.heads", "must divide model.dim");
  require(m.ffn_dim > 0, "model.ffn_dim", "must be > 0");
  require(m.frames > 0, "model.frames", "must be > 0");
  require(m.embed_h > 0, "model.embed_h", "must be > 0");
  require(m.embed_w > 0, "model.embed_w", "must be > 0");
  require(m.height > 0 && m.height % m.embed_h == 0, "model.height",
          "must be a positive multiple of model.embed_h");
  require(m.width > 0 && m.width % m.embed_w == 0, "model.width",
          "must be a positive multiple of model.embed_w");
  require(m.video_channels > 0, "model.video_channels", "must be > 0");
  require(m.depth_channels > 0, "model.depth_channels", "must be > 0");
  require(m.camera_channels > 0, "model.camera_channels", "must be > 0");
  require(m.text_tokens >= 0, "model.text_tokens", "must be >= 0");
  require(m.text_dim > 0, "model.text_dim", "must be > 0");
  for (int l : m.noise_layers) {
    require(l >= 1 && l <= m.layers, "model.noise_layers",
            "layer " + std::to_string(l) + " outside [1, model.layers]");
  }
  require(m.noise_sigma >= 0.0f, "model.noise_sigma", "must be >= 0");
  try {
    m.validate();
  } catch (const Error& e) {
    throw ConfigError("model", e.what());
  }

  require(hero.interval >= 1, "hero.interval", "must be >= 1");
  require(hero.threshold >= 1 && hero.threshold <= m.layers + 1, "hero.threshold",
          "must lie in [1, model.layers + 1]");
  require(hero.ratio > 0.0 && hero.ratio <= 1.0, "hero.ratio", "must lie in (0, 1]");
  require(hero.patch_h >= 1, "hero.patch_h", "must be >= 1");
  require(hero.patch_w >= 1, "hero.patch_w", "must be >= 1");
  require(hero.max_age >= 0, "hero.max_age", "must be >= 0 (0 selects 4 * interval)");
  if (hero.edges == EdgeTiles::kReject) {
    require(m.grid_h() % hero.patch_h == 0, "hero.patch_h", "must divide the token grid height");
    require(m.grid_w() % hero.patch_w == 0, "hero.patch_w", "must divide the token grid width");
  }

  require(parse_policy(policy).has_value(), "run.policy", "unknown policy '" + policy + "'");
  require(steps >= 1, "run.steps", "must be >= 1");
  require(seeds >= 1, "run.seeds", "must be >= 1");
  require(step_size > 0.0f, "run.step_size", "must be > 0");
  require(!out_dir.empty(), "run.out", "must not be empty");
}

void RunConfig::set_seed(uint64_t value) {
  seed = value;
  model.seed = value;
  hero.rng_seed = value;
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  find_field(key).set(config, key, trim(value));
}

RunConfig parse_config(std::istream& in, std::string_view source) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(std::string(text), where + ": unterminated section");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      if (section != "model" && section != "hero" && section != "run") {
        throw ConfigError(section, where + ": unknown section");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(text), where + ": expected 'key = value'");
    }
    const std::string_view name = trim(text.substr(0, eq));
    std::string key(name);
    if (name.find('.') == std::string_view::npos) {
      if (section.empty()) throw ConfigError(key, where + ": key outside any section");
      key = section + "." + key;
    }
    if (!seen.insert(key).second) throw ConfigError(key, where + ": repeated key");
    try {
      apply_setting(config, key, trim(text.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(e.key(), where + ": " + e.detail());
    }
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  return parse_config(in, path);
}

void write_config(std::ostream& out, const RunConfig& config) {
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string_view sec = f.key.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << "[" << sec << "]\n";
      section = std::string(sec);
    }
    out << f.key.substr(dot + 1) << " = " << f.get(config) << "\n";
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace hxr
