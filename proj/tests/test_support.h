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

#include <cmath>
#include <vector>

#include "hxr/cache_policy.h"
#include "hxr/harness.h"
#include "hxr/toy_mmdit.h"

namespace hxr::testing {

// Small enough that a full run takes milliseconds.
inline ModelConfig tiny_config(uint64_t seed = 0) {
  ModelConfig c;
  c.layers = 3;
  c.dim = 16;
  c.heads = 2;
  c.ffn_dim = 32;
  c.frames = 2;
  c.height = 4;
  c.width = 6;
  c.text_tokens = 3;
  c.text_dim = 5;
  c.seed = seed;
  return c;
}

// Criterion-sized toy: L=6, d=64, f=2, 4x6 token grid, N=8.
inline ModelConfig toy_config(uint64_t seed = 0) {
  ModelConfig c;
  c.seed = seed;
  return c;
}

inline Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed, double scale = 1.0) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (float& v : t.data()) v = static_cast<float>(rng.normal() * scale);
  return t;
}

// Straight-line double precision forward pass written from the model
// definition, sharing only the weights with ToyMMDiT.
class ReferenceForward {
 public:
  explicit ReferenceForward(const ToyMMDiT& model) : m_(model), c_(model.config()) {}

  using Mat = std::vector<std::vector<double>>;

  Mat linear(const Mat& x, const Linear& l) const {
    const int64_t in = l.weight.rows(), out = l.weight.cols();
    Mat y(x.size(), std::vector<double>(out));
    for (size_t r = 0; r < x.size(); ++r) {
      for (int64_t j = 0; j < out; ++j) {
        double acc = l.bias.data()[j];
        for (int64_t i = 0; i < in; ++i) acc += x[r][i] * l.weight.at(i, j);
        y[r][j] = acc;
      }
    }
    return y;
  }

  static Mat norm(const Mat& x) {
    Mat y = x;
    for (auto& row : y) {
      double mean = 0, var = 0;
      for (double v : row) mean += v;
      mean /= row.size();
      for (double v : row) var += (v - mean) * (v - mean);
      var /= row.size();
      for (double& v : row) v = (v - mean) / std::sqrt(var + 1e-5);
    }
    return y;
  }

  // Returns the unified latent after embed, L layers and unpatchify.
  Tensor forward(const Tensor& latent, const Tensor& text, int t) const {
    const int n = c_.unified_tokens(), d = c_.dim;
    Mat patches(n);
    for (int tok = 0; tok < n; ++tok) {
      const int f = tok / (c_.grid_h() * c_.grid_w());
      const int pr = (tok / c_.grid_w()) % c_.grid_h();
      const int pc = tok % c_.grid_w();
      for (int a = 0; a < c_.embed_h; ++a) {
        for (int b = 0; b < c_.embed_w; ++b) {
          for (int ch = 0; ch < c_.channels(); ++ch) {
            const int64_t y = pr * c_.embed_h + a, x = pc * c_.embed_w + b;
            patches[tok].push_back(
                latent.data()[((int64_t{f} * c_.height + y) * c_.width + x) * c_.channels() + ch]);
          }
        }
      }
    }
    Mat z = linear(patches, m_.patch_projection());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j + 1 < d; j += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(j) / d);
        z[i][j] += std::sin(i * freq);
        z[i][j + 1] += std::cos(i * freq);
      }
    }
    Mat time_features(1, std::vector<double>(d, 0.0));
    const int half = d / 2;
    for (int j = 0; j < half; ++j) {
      const double freq = 0.5 * std::pow(100.0, -static_cast<double>(j) / half);
      time_features[0][j] = std::sin(t * freq);
      time_features[0][half + j] = std::cos(t * freq);
    }
    const Mat temb = linear(time_features, m_.time_projection());
    for (auto& row : z) {
      for (int j = 0; j < d; ++j) row[j] += temb[0][j];
    }
    Mat text_rows(c_.text_tokens);
    for (int r = 0; r < c_.text_tokens; ++r) {
      for (int j = 0; j < c_.text_dim; ++j) text_rows[r].push_back(text.at(r, j));
    }
    Mat joint = z;
    for (const auto& row : linear(text_rows, m_.text_projection())) joint.push_back(row);

    const int hd = d / c_.heads;
    for (int l = 1; l <= c_.layers; ++l) {
      const LayerWeights& w = m_.layer_weights(l);
      const Mat x = norm(joint);
      const Mat q = linear(x, w.query), k = linear(x, w.key), v = linear(x, w.value);
      Mat mixed(joint.size(), std::vector<double>(d, 0.0));
      for (size_t i = 0; i < joint.size(); ++i) {
        for (int h = 0; h < c_.heads; ++h) {
          std::vector<double> s(joint.size());
          double mx = -1e300;
          for (size_t j = 0; j < joint.size(); ++j) {
            double dot = 0;
            for (int e = 0; e < hd; ++e) dot += q[i][h * hd + e] * k[j][h * hd + e];
            s[j] = dot / std::sqrt(static_cast<double>(hd));
            mx = std::max(mx, s[j]);
          }
          double total = 0;
          for (double& p : s) total += (p = std::exp(p - mx));
          for (size_t j = 0; j < joint.size(); ++j) {
            for (int e = 0; e < hd; ++e) mixed[i][h * hd + e] += s[j] / total * v[j][h * hd + e];
          }
        }
      }
      const Mat attn = linear(mixed, w.out);
      for (size_t i = 0; i < joint.size(); ++i) {
        for (int j = 0; j < d; ++j) joint[i][j] += attn[i][j];
      }
      Mat hidden = linear(norm(joint), w.ffn_in);
      for (auto& row : hidden) {
        for (double& u : row) {
          u = 0.5 * u * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (u + 0.044715 * u * u * u)));
        }
      }
      const Mat ffn = linear(hidden, w.ffn_out);
      for (size_t i = 0; i < joint.size(); ++i) {
        for (int j = 0; j < d; ++j) joint[i][j] += ffn[i][j];
      }
    }
    joint.resize(n);
    const Mat out = linear(norm(joint), m_.output_projection());
    Tensor patches_out = Tensor::matrix(n, c_.patch_features());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < c_.patch_features(); ++j) patches_out.at(i, j) = static_cast<float>(out[i][j]);
    }
    return scatter_patches(c_, patches_out).z;
  }

 private:
  const ToyMMDiT& m_;
  const ModelConfig& c_;
};

// G = a_l + t * b_l and H likewise, independent of the token state: every
// transform output is affine in the timestep.
class AffineModel final : public DiffusionModel {
 public:
  explicit AffineModel(ModelConfig config) : config_(std::move(config)) {
    const int n = config_.unified_tokens(), d = config_.dim, nt = config_.text_tokens;
    for (int l = 0; l < config_.layers; ++l) {
      for (int k = 0; k < 2; ++k) {
        const uint64_t s = static_cast<uint64_t>(l * 2 + k);
        terms_.push_back({random_tensor({n, d}, 100 + s, 0.1), random_tensor({n, d}, 200 + s, 0.01),
                          random_tensor({nt, d}, 300 + s, 0.1), random_tensor({nt, d}, 400 + s, 0.01)});
      }
    }
  }

  const ModelConfig& config() const override { return config_; }

  TokenState embed(const UnifiedLatent&, const Tensor&, int t) const override {
    TokenState s;
    s.z = Tensor::matrix(config_.unified_tokens(), config_.dim);
    s.tau = Tensor::matrix(config_.text_tokens, config_.dim);
    s.t = t;
    s.layer = 1;
    return s;
  }

  TransformOutput transform(const TokenState& state, int layer, TransformKind kind,
                            const QuerySet& queries) const override {
    const Terms& tr = terms_[(layer - 1) * 2 + static_cast<int>(kind)];
    auto affine = [&](const Tensor& a, const Tensor& b) {
      Tensor out = a;
      for (int64_t i = 0; i < out.numel(); ++i) {
        out.data()[i] = static_cast<float>(a.data()[i] + static_cast<double>(state.t) * b.data()[i]);
      }
      return out;
    };
    TransformOutput out;
    const Tensor g = affine(tr.ga, tr.gb);
    if (queries.all_rows) {
      out.g = g;
    } else {
      out.g = Tensor::matrix(static_cast<int64_t>(queries.rows.size()), config_.dim);
      for (size_t i = 0; i < queries.rows.size(); ++i) {
        std::copy(g.row(queries.rows[i]).begin(), g.row(queries.rows[i]).end(),
                  out.g.row(static_cast<int64_t>(i)).begin());
      }
    }
    if (queries.text) out.h = affine(tr.ha, tr.hb);
    return out;
  }

  UnifiedLatent unembed(const Tensor&) const override {
    return UnifiedLatent{Tensor({config_.frames, config_.height, config_.width, config_.channels()})};
  }

  TransformOutput truth(int layer, TransformKind kind, int t) const {
    TokenState s;
    s.t = t;
    return transform(s, layer, kind, QuerySet::full());
  }

 private:
  struct Terms {
    Tensor ga, gb, ha, hb;
  };
  ModelConfig config_;
  std::vector<Terms> terms_;
};

// Largest relative L2 error of deep-layer extrapolated features against the
// affine truth, over followers of the second and later groups.
inline double affine_extrapolation_error(int interval, int steps, int threshold) {
  ModelConfig c = tiny_config();
  c.layers = 4;
  const AffineModel model(c);
  double worst = 0.0;
  int checked = 0;
  RunOptions options;
  options.step_size = 0.0f;
  options.observer = [&](const FeatureEvent& ev) {
    if (ev.source != FeatureSource::kExtrapolate) return;
    if (ev.position <= interval + 1) return;  // first group has no delta yet
    const int t = steps - ev.position + 1;
    const TransformOutput truth = model.truth(ev.layer, ev.kind, t);
    worst = std::max(worst, relative_l2(ev.output->g, truth.g));
    worst = std::max(worst, relative_l2(ev.output->h, truth.h));
    ++checked;
  };
  HeroConfig hero;
  hero.interval = interval;
  hero.threshold = threshold;
  hero.ratio = 0.5;
  const LatentBundle latents{Tensor({c.frames, c.height, c.width, c.video_channels}),
                             Tensor({c.frames, c.height, c.width, c.depth_channels}),
                             Tensor({c.frames, c.height, c.width, c.camera_channels})};
  run_denoising(model, Policy::hero_policy(hero), steps, latents,
                Tensor::matrix(c.text_tokens, c.text_dim), options);
  return checked > 0 ? worst : -1.0;
}

}  // namespace hxr::testing
