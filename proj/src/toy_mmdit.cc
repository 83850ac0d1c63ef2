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

#include "hxr/toy_mmdit.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "hxr/error.h"
#include "hxr/rng.h"

namespace hxr {
namespace {

constexpr float kNormEps = 1e-5f;
constexpr uint64_t kWeightStream = 1;
constexpr uint64_t kNoiseStream = 2;

Linear make_linear(Rng& rng, int in, int out) {
  Linear l{Tensor::matrix(in, out), Tensor({out})};
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (float& v : l.weight.data()) v = static_cast<float>(rng.normal() * scale);
  for (float& v : l.bias.data()) v = static_cast<float>(rng.normal() * 0.02);
  return l;
}

// out = x W + b
void apply_linear(std::span<const float> x, const Linear& l, std::span<float> out) {
  const int64_t in = l.weight.rows();
  const int64_t n = l.weight.cols();
  auto w = l.weight.data();
  std::copy(l.bias.data().begin(), l.bias.data().end(), out.begin());
  for (int64_t i = 0; i < in; ++i) {
    const float xi = x[i];
    const float* wrow = w.data() + i * n;
    for (int64_t j = 0; j < n; ++j) out[j] += xi * wrow[j];
  }
  mac_tally() += static_cast<uint64_t>(in * n);
}

void layer_norm(std::span<const float> x, std::span<float> out) {
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (float v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  const float inv = static_cast<float>(1.0 / std::sqrt(var + kNormEps));
  const float m = static_cast<float>(mean);
  for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) * inv;
}

float gelu(float x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
  return 0.5f * x * (1.0f + std::tanh(kC * (x + 0.044715f * x * x * x)));
}

// Row r of the joint sequence [z; tau].
std::span<const float> joint_row(const TokenState& s, int64_t r) {
  const int64_t n = s.z.rows();
  return r < n ? s.z.row(r) : s.tau.row(r - n);
}

int64_t joint_rows(const TokenState& s) { return s.z.rows() + s.tau.rows(); }

Tensor normalized_joint(const TokenState& s) {
  Tensor out = Tensor::matrix(joint_rows(s), s.z.cols());
  for (int64_t r = 0; r < out.rows(); ++r) layer_norm(joint_row(s, r), out.row(r));
  return out;
}

Tensor project_all(const Tensor& x, const Linear& l) {
  Tensor out = Tensor::matrix(x.rows(), l.weight.cols());
  for (int64_t r = 0; r < x.rows(); ++r) apply_linear(x.row(r), l, out.row(r));
  return out;
}

// Softmax of scaled dot products of `q` (one head slice) against all keys.
void head_scores(std::span<const float> q, const Tensor& keys, int64_t offset, int64_t head_dim,
                 std::vector<float>& probs) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  const int64_t s = keys.rows();
  probs.resize(s);
  float max_score = -INFINITY;
  for (int64_t j = 0; j < s; ++j) {
    const float* k = keys.row(j).data() + offset;
    float dot = 0.0f;
    for (int64_t c = 0; c < head_dim; ++c) dot += q[c] * k[c];
    probs[j] = dot * scale;
    max_score = std::max(max_score, probs[j]);
  }
  float total = 0.0f;
  for (float& p : probs) {
    p = std::exp(p - max_score);
    total += p;
  }
  for (float& p : probs) p /= total;
  mac_tally() += static_cast<uint64_t>(s * head_dim);
}

// Unified rows followed by text rows, as joint-sequence indices.
std::vector<int64_t> query_rows(const TokenState& s, const QuerySet& queries) {
  std::vector<int64_t> rows;
  const int64_t n = s.z.rows();
  if (queries.all_rows) {
    rows.reserve(n);
    for (int64_t r = 0; r < n; ++r) rows.push_back(r);
  } else {
    for (int32_t r : queries.rows) {
      if (r < 0 || r >= n) {
        throw StructuralError("query row " + std::to_string(r) + " outside " +
                              std::to_string(n) + " unified tokens");
      }
      rows.push_back(r);
    }
  }
  if (queries.text) {
    for (int64_t r = 0; r < s.tau.rows(); ++r) rows.push_back(n + r);
  }
  return rows;
}

TransformOutput split_output(const Tensor& joint, int64_t unified_count, bool text) {
  const int64_t d = joint.cols();
  TransformOutput out;
  out.g = Tensor::matrix(unified_count, d);
  std::copy_n(joint.data().begin(), unified_count * d, out.g.data().begin());
  if (text) {
    const int64_t text_rows = joint.rows() - unified_count;
    out.h = Tensor::matrix(text_rows, d);
    std::copy(joint.data().begin() + unified_count * d, joint.data().end(),
              out.h.data().begin());
  }
  return out;
}

void check_state(const ModelConfig& c, const TokenState& s) {
  if (s.z.rank() != 2 || s.z.rows() != c.unified_tokens() || s.z.cols() != c.dim) {
    throw StructuralError("unified tokens " + shape_string(s.z.shape()) + " expected [" +
                          std::to_string(c.unified_tokens()) + "," + std::to_string(c.dim) +
                          "]");
  }
  if (s.tau.rank() != 2 || s.tau.rows() != c.text_tokens || s.tau.cols() != c.dim) {
    throw StructuralError("text tokens " + shape_string(s.tau.shape()) + " expected [" +
                          std::to_string(c.text_tokens) + "," + std::to_string(c.dim) + "]");
  }
}

void check_latent(const ModelConfig& c, const Tensor& z, const char* what) {
  const std::vector<int64_t> expected = {c.frames, c.height, c.width, c.channels()};
  if (z.shape() != expected) {
    throw StructuralError(std::string(what) + " shape " + shape_string(z.shape()) +
                          " expected " + shape_string(expected));
  }
}

}  // namespace

uint64_t& mac_tally() {
  thread_local uint64_t tally = 0;
  return tally;
}

std::string_view to_string(TransformKind kind) {
  return kind == TransformKind::kFullAttn ? "FullAttn" : "FFN";
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw StructuralError(std::string(name) + " must be >= 1, got " + std::to_string(v));
  };
  if (layers < 0) throw StructuralError("layers must be >= 0");
  positive(dim, "dim");
  positive(heads, "heads");
  positive(ffn_dim, "ffn_dim");
  positive(frames, "frames");
  positive(height, "height");
  positive(width, "width");
  positive(video_channels, "video_channels");
  positive(depth_channels, "depth_channels");
  positive(camera_channels, "camera_channels");
  positive(embed_h, "embed_h");
  positive(embed_w, "embed_w");
  positive(text_dim, "text_dim");
  if (text_tokens < 0) throw StructuralError("text_tokens must be >= 0");
  if (dim % heads != 0) {
    throw StructuralError("dim " + std::to_string(dim) + " not divisible by heads " +
                          std::to_string(heads));
  }
  if (height % embed_h != 0) {
    throw StructuralError("height " + std::to_string(height) + " not divisible by embed_h " +
                          std::to_string(embed_h));
  }
  if (width % embed_w != 0) {
    throw StructuralError("width " + std::to_string(width) + " not divisible by embed_w " +
                          std::to_string(embed_w));
  }
  for (int l : noise_layers) {
    if (l < 1 || l > layers) throw StructuralError("noise layer " + std::to_string(l) + " out of range");
  }
  if (!(noise_sigma >= 0.0f)) throw StructuralError("noise_sigma must be >= 0");
}

bool operator==(const ModelConfig& a, const ModelConfig& b) {
  return a.layers == b.layers && a.dim == b.dim && a.heads == b.heads &&
         a.ffn_dim == b.ffn_dim && a.frames == b.frames && a.height == b.height &&
         a.width == b.width && a.video_channels == b.video_channels &&
         a.depth_channels == b.depth_channels && a.camera_channels == b.camera_channels &&
         a.embed_h == b.embed_h && a.embed_w == b.embed_w && a.text_tokens == b.text_tokens &&
         a.text_dim == b.text_dim && a.seed == b.seed &&
         a.positional_encoding == b.positional_encoding &&
         a.time_embedding == b.time_embedding && a.noise_layers == b.noise_layers &&
         a.noise_sigma == b.noise_sigma && a.noise_seed == b.noise_seed;
}

UnifiedLatent concat_modalities(const LatentBundle& bundle) {
  const Tensor* parts[] = {&bundle.video, &bundle.depth, &bundle.camera};
  const char* names[] = {"video", "depth", "camera"};
  const char* axes[] = {"frames", "height", "width"};
  for (int i = 0; i < 3; ++i) {
    if (parts[i]->rank() != 4) {
      throw StructuralError(std::string(names[i]) + " latent must be rank 4, got " +
                            shape_string(parts[i]->shape()));
    }
    if (parts[i]->dim(3) < 1) throw StructuralError(std::string(names[i]) + " has no channels");
  }
  for (int i = 1; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      if (parts[i]->dim(a) != bundle.video.dim(a)) {
        throw StructuralError(std::string(names[i]) + " latent " + axes[a] + " " +
                              std::to_string(parts[i]->dim(a)) + " does not match video " +
                              std::to_string(bundle.video.dim(a)));
      }
    }
  }
  const int64_t cells = bundle.video.dim(0) * bundle.video.dim(1) * bundle.video.dim(2);
  const int64_t cv = bundle.video.dim(3), cd = bundle.depth.dim(3), cc = bundle.camera.dim(3);
  const int64_t c = cv + cd + cc;
  UnifiedLatent out{Tensor({bundle.video.dim(0), bundle.video.dim(1), bundle.video.dim(2), c})};
  auto dst = out.z.data();
  for (int64_t i = 0; i < cells; ++i) {
    float* cell = dst.data() + i * c;
    std::copy_n(bundle.video.data().data() + i * cv, cv, cell);
    std::copy_n(bundle.depth.data().data() + i * cd, cd, cell + cv);
    std::copy_n(bundle.camera.data().data() + i * cc, cc, cell + cv + cd);
  }
  return out;
}

LatentBundle split_modalities(const UnifiedLatent& latent, int video_channels,
                              int depth_channels, int camera_channels) {
  const Tensor& z = latent.z;
  if (z.rank() != 4) throw StructuralError("unified latent must be rank 4, got " + shape_string(z.shape()));
  if (video_channels < 1 || depth_channels < 1 || camera_channels < 1) {
    throw StructuralError("modality channel counts must be >= 1");
  }
  const int64_t c = video_channels + depth_channels + camera_channels;
  if (z.dim(3) != c) {
    throw StructuralError("unified latent has " + std::to_string(z.dim(3)) +
                          " channels, expected " + std::to_string(c));
  }
  const int64_t f = z.dim(0), h = z.dim(1), w = z.dim(2);
  LatentBundle out{Tensor({f, h, w, video_channels}), Tensor({f, h, w, depth_channels}),
                   Tensor({f, h, w, camera_channels})};
  const int64_t cells = f * h * w;
  for (int64_t i = 0; i < cells; ++i) {
    const float* cell = z.data().data() + i * c;
    std::copy_n(cell, video_channels, out.video.data().data() + i * video_channels);
    std::copy_n(cell + video_channels, depth_channels,
                out.depth.data().data() + i * depth_channels);
    std::copy_n(cell + video_channels + depth_channels, camera_channels,
                out.camera.data().data() + i * camera_channels);
  }
  return out;
}

void residual_update_in_place(TokenState& state, const Tensor& g, const Tensor& h) {
  require_same_shape(state.z, g, "residual_update(z, G)");
  require_same_shape(state.tau, h, "residual_update(tau, H)");
  auto z = state.z.data();
  auto gv = g.data();
  for (size_t i = 0; i < z.size(); ++i) z[i] += gv[i];
  auto tau = state.tau.data();
  auto hv = h.data();
  for (size_t i = 0; i < tau.size(); ++i) tau[i] += hv[i];
}

TokenState residual_update(TokenState state, const Tensor& g, const Tensor& h) {
  residual_update_in_place(state, g, h);
  return state;
}

UnifiedLatent full_forward(const DiffusionModel& model, const UnifiedLatent& latent,
                           const Tensor& text, int t) {
  TokenState state = model.embed(latent, text, t);
  for (int l = 1; l <= model.config().layers; ++l) {
    for (TransformKind kind : kTransformOrder) {
      TransformOutput out = layer_transform(model, state, l, kind);
      residual_update_in_place(state, out.g, out.h);
    }
    state.layer = l + 1;
  }
  return model.unembed(state.z);
}

int token_index(const ModelConfig& c, GridPos p) {
  if (p.frame < 0 || p.frame >= c.frames || p.row < 0 || p.row >= c.grid_h() || p.col < 0 ||
      p.col >= c.grid_w()) {
    throw ContractError("grid position outside token grid");
  }
  return (p.frame * c.grid_h() + p.row) * c.grid_w() + p.col;
}

GridPos token_position(const ModelConfig& c, int index) {
  if (index < 0 || index >= c.unified_tokens()) throw ContractError("token index out of range");
  const int per_frame = c.grid_h() * c.grid_w();
  return GridPos{index / per_frame, (index % per_frame) / c.grid_w(), index % c.grid_w()};
}

Tensor gather_patches(const ModelConfig& c, const UnifiedLatent& latent) {
  check_latent(c, latent.z, "unified latent");
  const int ch = c.channels();
  Tensor out = Tensor::matrix(c.unified_tokens(), c.patch_features());
  for (int tok = 0; tok < c.unified_tokens(); ++tok) {
    const GridPos p = token_position(c, tok);
    auto dst = out.row(tok);
    int k = 0;
    for (int a = 0; a < c.embed_h; ++a) {
      for (int b = 0; b < c.embed_w; ++b) {
        const int64_t y = p.row * c.embed_h + a;
        const int64_t x = p.col * c.embed_w + b;
        const float* src =
            latent.z.data().data() + ((static_cast<int64_t>(p.frame) * c.height + y) * c.width + x) * ch;
        for (int ci = 0; ci < ch; ++ci) dst[k++] = src[ci];
      }
    }
  }
  return out;
}

UnifiedLatent scatter_patches(const ModelConfig& c, const Tensor& patches) {
  if (patches.rank() != 2 || patches.rows() != c.unified_tokens() ||
      patches.cols() != c.patch_features()) {
    throw StructuralError("patch matrix " + shape_string(patches.shape()) + " expected [" +
                          std::to_string(c.unified_tokens()) + "," +
                          std::to_string(c.patch_features()) + "]");
  }
  const int ch = c.channels();
  UnifiedLatent out{Tensor({c.frames, c.height, c.width, ch})};
  for (int tok = 0; tok < c.unified_tokens(); ++tok) {
    const GridPos p = token_position(c, tok);
    auto src = patches.row(tok);
    int k = 0;
    for (int a = 0; a < c.embed_h; ++a) {
      for (int b = 0; b < c.embed_w; ++b) {
        const int64_t y = p.row * c.embed_h + a;
        const int64_t x = p.col * c.embed_w + b;
        float* dst =
            out.z.data().data() + ((static_cast<int64_t>(p.frame) * c.height + y) * c.width + x) * ch;
        for (int ci = 0; ci < ch; ++ci) dst[ci] = src[k++];
      }
    }
  }
  return out;
}

ToyMMDiT::ToyMMDiT(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const int d = config_.dim;
  Rng rng(derive_seed(config_.seed, kWeightStream));
  patch_ = make_linear(rng, config_.patch_features(), d);
  text_ = make_linear(rng, config_.text_dim, d);
  time_ = make_linear(rng, d, d);
  head_ = make_linear(rng, d, config_.patch_features());
  layers_.reserve(config_.layers);
  for (int l = 0; l < config_.layers; ++l) {
    LayerWeights w;
    w.query = make_linear(rng, d, d);
    w.key = make_linear(rng, d, d);
    w.value = make_linear(rng, d, d);
    w.out = make_linear(rng, d, d);
    w.ffn_in = make_linear(rng, d, config_.ffn_dim);
    w.ffn_out = make_linear(rng, config_.ffn_dim, d);
    layers_.push_back(std::move(w));
  }
  positions_ = Tensor::matrix(config_.unified_tokens(), d);
  for (int i = 0; i < config_.unified_tokens(); ++i) {
    for (int j = 0; j + 1 < d; j += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / d);
      positions_.at(i, j) = static_cast<float>(std::sin(i * freq));
      positions_.at(i, j + 1) = static_cast<float>(std::cos(i * freq));
    }
  }
}

TokenState ToyMMDiT::patch_embed(const UnifiedLatent& latent, const Tensor& text) const {
  const Tensor patches = gather_patches(config_, latent);
  const std::vector<int64_t> text_shape = {config_.text_tokens, config_.text_dim};
  if (text.shape() != text_shape) {
    throw StructuralError("text latent " + shape_string(text.shape()) + " expected " +
                          shape_string(text_shape));
  }
  TokenState s;
  s.z = Tensor::matrix(config_.unified_tokens(), config_.dim);
  for (int64_t r = 0; r < s.z.rows(); ++r) {
    apply_linear(patches.row(r), patch_, s.z.row(r));
    if (config_.positional_encoding) {
      auto pe = positions_.row(r);
      auto zr = s.z.row(r);
      for (int64_t c = 0; c < s.z.cols(); ++c) zr[c] += pe[c];
    }
  }
  s.tau = Tensor::matrix(config_.text_tokens, config_.dim);
  for (int64_t r = 0; r < s.tau.rows(); ++r) apply_linear(text.row(r), text_, s.tau.row(r));
  s.layer = 1;
  return s;
}

std::vector<float> ToyMMDiT::timestep_embedding(int t) const {
  const int d = config_.dim;
  const int half = d / 2;
  std::vector<float> features(d, 0.0f);
  for (int j = 0; j < half; ++j) {
    const double freq = 0.5 * std::pow(100.0, -static_cast<double>(j) / std::max(half, 1));
    features[j] = static_cast<float>(std::sin(t * freq));
    features[half + j] = static_cast<float>(std::cos(t * freq));
  }
  std::vector<float> out(d);
  apply_linear(features, time_, out);
  return out;
}

TokenState ToyMMDiT::embed(const UnifiedLatent& latent, const Tensor& text, int t) const {
  TokenState s = patch_embed(latent, text);
  s.t = t;
  if (config_.time_embedding) {
    const std::vector<float> emb = timestep_embedding(t);
    for (int64_t r = 0; r < s.z.rows(); ++r) {
      auto zr = s.z.row(r);
      for (int64_t c = 0; c < s.z.cols(); ++c) zr[c] += emb[c];
    }
  }
  return s;
}

UnifiedLatent ToyMMDiT::unpatchify(const Tensor& z) const {
  if (z.rank() != 2 || z.rows() != config_.unified_tokens() || z.cols() != config_.dim) {
    throw StructuralError("unpatchify: tokens " + shape_string(z.shape()) + " expected [" +
                          std::to_string(config_.unified_tokens()) + "," +
                          std::to_string(config_.dim) + "]");
  }
  Tensor patches = Tensor::matrix(z.rows(), config_.patch_features());
  std::vector<float> normed(config_.dim);
  for (int64_t r = 0; r < z.rows(); ++r) {
    layer_norm(z.row(r), normed);
    apply_linear(normed, head_, patches.row(r));
  }
  return scatter_patches(config_, patches);
}

TransformOutput ToyMMDiT::transform(const TokenState& state, int layer, TransformKind kind,
                                    const QuerySet& queries) const {
  if (layer < 1 || layer > config_.layers) {
    throw ContractError("layer " + std::to_string(layer) + " outside [1, " +
                        std::to_string(config_.layers) + "]");
  }
  check_state(config_, state);
  const LayerWeights& w = layers_[layer - 1];
  TransformOutput out = kind == TransformKind::kFullAttn ? attention(state, w, queries)
                                                         : feed_forward(state, w, queries);
  perturb(out, state, layer, kind, queries);
  if (!out.g.all_finite() || !out.h.all_finite()) {
    throw NumericError("non-finite output in layer " + std::to_string(layer) + " " +
                       std::string(to_string(kind)));
  }
  return out;
}

TransformOutput ToyMMDiT::attention(const TokenState& state, const LayerWeights& w,
                                    const QuerySet& queries) const {
  const int64_t d = config_.dim;
  const int64_t head_dim = d / config_.heads;
  const Tensor normed = normalized_joint(state);
  const Tensor keys = project_all(normed, w.key);
  const Tensor values = project_all(normed, w.value);
  const std::vector<int64_t> rows = query_rows(state, queries);

  Tensor joint = Tensor::matrix(static_cast<int64_t>(rows.size()), d);
  std::vector<float> q(d), mixed(d), probs;
  for (size_t i = 0; i < rows.size(); ++i) {
    apply_linear(normed.row(rows[i]), w.query, q);
    std::fill(mixed.begin(), mixed.end(), 0.0f);
    for (int h = 0; h < config_.heads; ++h) {
      const int64_t offset = h * head_dim;
      head_scores(std::span<const float>(q).subspan(offset, head_dim), keys, offset, head_dim,
                  probs);
      for (int64_t j = 0; j < keys.rows(); ++j) {
        const float p = probs[j];
        const float* v = values.row(j).data() + offset;
        for (int64_t c = 0; c < head_dim; ++c) mixed[offset + c] += p * v[c];
      }
      mac_tally() += static_cast<uint64_t>(keys.rows() * head_dim);
    }
    apply_linear(mixed, w.out, joint.row(static_cast<int64_t>(i)));
  }
  const int64_t unified = queries.all_rows ? state.z.rows()
                                           : static_cast<int64_t>(queries.rows.size());
  return split_output(joint, unified, queries.text);
}

TransformOutput ToyMMDiT::feed_forward(const TokenState& state, const LayerWeights& w,
                                       const QuerySet& queries) const {
  const int64_t d = config_.dim;
  const std::vector<int64_t> rows = query_rows(state, queries);
  Tensor joint = Tensor::matrix(static_cast<int64_t>(rows.size()), d);
  std::vector<float> normed(d), hidden(config_.ffn_dim);
  for (size_t i = 0; i < rows.size(); ++i) {
    layer_norm(joint_row(state, rows[i]), normed);
    apply_linear(normed, w.ffn_in, hidden);
    for (float& v : hidden) v = gelu(v);
    apply_linear(hidden, w.ffn_out, joint.row(static_cast<int64_t>(i)));
  }
  const int64_t unified = queries.all_rows ? state.z.rows()
                                           : static_cast<int64_t>(queries.rows.size());
  return split_output(joint, unified, queries.text);
}

void ToyMMDiT::perturb(TransformOutput& out, const TokenState& state, int layer,
                       TransformKind kind, const QuerySet& queries) const {
  if (config_.noise_sigma == 0.0f) return;
  if (std::find(config_.noise_layers.begin(), config_.noise_layers.end(), layer) ==
      config_.noise_layers.end()) {
    return;
  }
  auto add_noise = [&](std::span<float> row, int64_t joint_index) {
    Rng rng(derive_seed(config_.noise_seed, kNoiseStream, static_cast<uint64_t>(state.t),
                        static_cast<uint64_t>(layer), static_cast<uint64_t>(kind),
                        static_cast<uint64_t>(joint_index)));
    for (float& v : row) v += static_cast<float>(config_.noise_sigma * rng.normal());
  };
  for (int64_t i = 0; i < out.g.rows(); ++i) {
    add_noise(out.g.row(i), queries.all_rows ? i : queries.rows[i]);
  }
  if (out.h.rank() != 2) return;
  for (int64_t i = 0; i < out.h.rows(); ++i) add_noise(out.h.row(i), state.z.rows() + i);
}

std::vector<float> ToyMMDiT::attention_row(const TokenState& state, int layer, int head,
                                           int query) const {
  if (layer < 1 || layer > config_.layers) throw ContractError("layer out of range");
  if (head < 0 || head >= config_.heads) throw ContractError("head out of range");
  check_state(config_, state);
  const LayerWeights& w = layers_[layer - 1];
  const int64_t head_dim = config_.dim / config_.heads;
  const Tensor normed = normalized_joint(state);
  if (query < 0 || query >= normed.rows()) throw ContractError("query row out of range");
  const Tensor keys = project_all(normed, w.key);
  std::vector<float> q(config_.dim), probs;
  apply_linear(normed.row(query), w.query, q);
  head_scores(std::span<const float>(q).subspan(head * head_dim, head_dim), keys,
              head * head_dim, head_dim, probs);
  return probs;
}

}  // namespace hxr
