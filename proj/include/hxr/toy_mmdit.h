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

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "hxr/tensor.h"

namespace hxr {

// Every MMDiT layer applies FullAttn then FFN, each preceded by LayerNorm.
enum class TransformKind { kFullAttn = 0, kFfn = 1 };
inline constexpr std::array<TransformKind, 2> kTransformOrder = {TransformKind::kFullAttn,
                                                                 TransformKind::kFfn};
std::string_view to_string(TransformKind kind);

struct ModelConfig {
  int layers = 6;
  int dim = 64;
  int heads = 4;
  int ffn_dim = 256;
  int frames = 2;
  int height = 8;
  int width = 12;
  int video_channels = 4;
  int depth_channels = 2;
  int camera_channels = 1;
  int embed_h = 2;  // patch-embedding strides: grid is height/embed_h x width/embed_w
  int embed_w = 2;
  int text_tokens = 8;
  int text_dim = 16;
  uint64_t seed = 0;
  bool positional_encoding = true;
  bool time_embedding = true;
  // Gaussian perturbation of transform outputs, for stability experiments.
  std::vector<int> noise_layers;
  float noise_sigma = 0.0f;
  uint64_t noise_seed = 0;

  int channels() const { return video_channels + depth_channels + camera_channels; }
  int grid_h() const { return height / embed_h; }
  int grid_w() const { return width / embed_w; }
  int unified_tokens() const { return frames * grid_h() * grid_w(); }
  int patch_features() const { return embed_h * embed_w * channels(); }

  // Throws StructuralError for divisibility / dimension violations.
  void validate() const;
};

bool operator==(const ModelConfig& a, const ModelConfig& b);

// Z_v, Z_d, Z_c over a shared [f, h, w] grid.
struct LatentBundle {
  Tensor video;
  Tensor depth;
  Tensor camera;
};

// Channel concatenation of a LatentBundle, [f, h, w, c_v + c_d + c_c].
struct UnifiedLatent {
  Tensor z;
};

// Unified tokens z [f*h'*w', d] and text tokens tau [N, d] at one layer and step.
struct TokenState {
  Tensor z;
  Tensor tau;
  int t = 0;
  int layer = 0;
};

UnifiedLatent concat_modalities(const LatentBundle& bundle);
LatentBundle split_modalities(const UnifiedLatent& latent, int video_channels,
                              int depth_channels, int camera_channels);

// z + G, tau + H.
TokenState residual_update(TokenState state, const Tensor& g, const Tensor& h);
void residual_update_in_place(TokenState& state, const Tensor& g, const Tensor& h);

// Rows that issue queries in a transform. Text rows are all-or-nothing.
struct QuerySet {
  std::vector<int32_t> rows;  // ascending unified indices, used when !all_rows
  bool all_rows = true;
  bool text = true;

  static QuerySet full() { return {}; }
  static QuerySet subset(std::vector<int32_t> rows, bool text) {
    return QuerySet{std::move(rows), false, text};
  }
};

// G holds one row per queried unified token (in QuerySet order); H holds all N
// text rows when text was queried and is empty otherwise.
struct TransformOutput {
  Tensor g;
  Tensor h;
};

// The structural contract a scheduler hooks into.
class DiffusionModel {
 public:
  virtual ~DiffusionModel() = default;
  virtual const ModelConfig& config() const = 0;
  virtual TokenState embed(const UnifiedLatent& latent, const Tensor& text, int t) const = 0;
  // Output before residual addition. Layers are 1-based.
  virtual TransformOutput transform(const TokenState& state, int layer, TransformKind kind,
                                    const QuerySet& queries) const = 0;
  virtual UnifiedLatent unembed(const Tensor& z) const = 0;
};

inline TransformOutput layer_transform(const DiffusionModel& model, const TokenState& state,
                                       int layer, TransformKind kind) {
  return model.transform(state, layer, kind, QuerySet::full());
}

// Reference uncached pass: embed, L x (FullAttn, FFN with residuals), unembed.
UnifiedLatent full_forward(const DiffusionModel& model, const UnifiedLatent& latent,
                           const Tensor& text, int t);

struct GridPos {
  int frame = 0;
  int row = 0;  // patch row in [0, h')
  int col = 0;  // patch col in [0, w')
};

// Token order is frame-major, then patch row, then patch column.
int token_index(const ModelConfig& config, GridPos pos);
GridPos token_position(const ModelConfig& config, int index);

// [f*h'*w', e_h*e_w*C] patch vectors, each flattened as (row, col, channel).
Tensor gather_patches(const ModelConfig& config, const UnifiedLatent& latent);
UnifiedLatent scatter_patches(const ModelConfig& config, const Tensor& patches);

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct LayerWeights {
  Linear query, key, value, out;
  Linear ffn_in, ffn_out;
};

// Small deterministic MMDiT with weights drawn from config.seed.
class ToyMMDiT final : public DiffusionModel {
 public:
  explicit ToyMMDiT(ModelConfig config);

  const ModelConfig& config() const override { return config_; }
  TokenState embed(const UnifiedLatent& latent, const Tensor& text, int t) const override;
  TransformOutput transform(const TokenState& state, int layer, TransformKind kind,
                            const QuerySet& queries) const override;
  UnifiedLatent unembed(const Tensor& z) const override { return unpatchify(z); }

  // Linear patch projection (+ fixed sinusoidal positions) and text projection.
  TokenState patch_embed(const UnifiedLatent& latent, const Tensor& text) const;
  // Final LayerNorm + linear head, then inverse of the patch flattening.
  UnifiedLatent unpatchify(const Tensor& z) const;
  // Vector added to every unified token at step t when time_embedding is on.
  std::vector<float> timestep_embedding(int t) const;

  // Softmax weights of one query row of one head over all s = n + N keys.
  std::vector<float> attention_row(const TokenState& state, int layer, int head,
                                   int query) const;

  const LayerWeights& layer_weights(int layer) const { return layers_.at(layer - 1); }
  const Linear& patch_projection() const { return patch_; }
  const Linear& text_projection() const { return text_; }
  const Linear& time_projection() const { return time_; }
  const Linear& output_projection() const { return head_; }
  const Tensor& positional_table() const { return positions_; }

 private:
  TransformOutput attention(const TokenState& state, const LayerWeights& w,
                            const QuerySet& queries) const;
  TransformOutput feed_forward(const TokenState& state, const LayerWeights& w,
                               const QuerySet& queries) const;
  void perturb(TransformOutput& out, const TokenState& state, int layer, TransformKind kind,
               const QuerySet& queries) const;

  ModelConfig config_;
  Linear patch_, text_, time_, head_;
  Tensor positions_;  // [n, d]
  std::vector<LayerWeights> layers_;
};

// Multiply-accumulate tally of the toy model's matmuls on this thread.
uint64_t& mac_tally();

}  // namespace hxr
