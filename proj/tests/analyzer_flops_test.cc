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

#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "hxr/analyzer.h"
#include "hxr/cache_policy.h"
#include "hxr/error.h"
#include "hxr/flops.h"
#include "hxr/rng.h"

namespace hxr {
namespace {

FeatureTrace scalar_trace(std::vector<float> xs) {
  FeatureTrace t;
  for (float x : xs) t.push_back({x});
  return t;
}

FeatureTrace random_trace(uint64_t seed, int steps, int dims) {
  Rng rng(seed);
  FeatureTrace t(steps, std::vector<float>(dims));
  for (auto& step : t) {
    for (float& v : step) v = static_cast<float>(rng.normal());
  }
  return t;
}

TEST_CASE("second-order variance of a unit spike") {
  CHECK(second_order_variance(scalar_trace({0, 0, 1, 0, 0})) == 2.0);
  CHECK(second_order_variance(scalar_trace({1, 2, 3, 4, 5})) == 0.0);
  CHECK(second_order_variance(scalar_trace({0, 1, 4, 9, 16})) == 0.0);  // constant curvature
  CHECK(second_order_variance(scalar_trace({3, 1, 7})) == 0.0);         // one difference
  CHECK_THROWS_AS(second_order_variance(scalar_trace({1, 2})), ContractError);
  FeatureTrace ragged = {{1, 2}, {3}, {4, 5}};
  CHECK_THROWS_AS(second_order_variance(ragged), StructuralError);
}

TEST_CASE("variance is averaged over feature dimensions") {
  FeatureTrace t = {{0, 0}, {0, 0}, {1, 0}, {0, 0}, {0, 0}};
  CHECK(second_order_variance(t) == 1.0);
}

TEST_CASE("variance is translation invariant and scales quadratically") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const FeatureTrace t = random_trace(seed, 3 + static_cast<int>(seed % 20), 4);
    const double v = second_order_variance(t);
    FeatureTrace shifted = t, scaled = t;
    const float c = static_cast<float>(seed) - 20.0f;
    const float alpha = 0.5f + static_cast<float>(seed % 7);
    for (auto& step : shifted) {
      for (float& x : step) x += c;
    }
    for (auto& step : scaled) {
      for (float& x : step) x *= alpha;
    }
    CHECK(second_order_variance(shifted) == doctest::Approx(v).epsilon(1e-5).scale(1.0));
    CHECK(second_order_variance(scaled) == doctest::Approx(alpha * alpha * v).epsilon(1e-6));
  }
}

TEST_CASE("stability scores are min-max normalized with pinned endpoints") {
  const std::vector<double> v = {4.0, 1.0, 2.5, 1.0};
  const StabilityScores s = stability_scores(v);
  CHECK(s.score == std::vector<double>{0.0, 1.0, 0.5, 1.0});
  const std::vector<double> same = {3.0, 3.0, 3.0};
  CHECK(stability_scores(same).score == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(stability_scores(std::vector<double>{}).score.empty());
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<double> xs(6);
    for (double& x : xs) x = rng.uniform() * 10.0;
    const StabilityScores r = stability_scores(xs);
    CHECK(*std::min_element(r.score.begin(), r.score.end()) == 0.0);
    CHECK(*std::max_element(r.score.begin(), r.score.end()) == 1.0);
  }
}

TEST_CASE("noisy layers rank below smooth layers") {
  LayerTraces traces;
  Rng rng(3);
  for (int l = 0; l < 4; ++l) {
    FeatureTrace t;
    const double noise = l < 2 ? 1.0 : 0.01;
    for (int step = 0; step < 12; ++step) {
      t.push_back({static_cast<float>(0.1 * step + noise * rng.normal())});
    }
    traces.layers.push_back(t);
  }
  const StabilityScores s = analyze_traces(traces);
  const std::vector<int> order = rank_by_stability(s);
  CHECK(std::max(s.score[0], s.score[1]) < std::min(s.score[2], s.score[3]));
  CHECK(order.back() <= 2);
  CHECK(order.front() >= 3);
}

TEST_CASE("trace CSV round trips and stability CSV has the documented header") {
  LayerTraces traces;
  traces.layers = {random_trace(1, 4, 3), random_trace(2, 4, 3)};
  std::stringstream io;
  write_traces_csv(io, traces);
  const std::string text = io.str();
  CHECK(text.rfind("layer,step,f0,f1,f2\n", 0) == 0);
  const LayerTraces back = read_traces_csv(io);
  REQUIRE(back.layers.size() == 2);
  for (size_t l = 0; l < 2; ++l) {
    for (size_t s = 0; s < 4; ++s) CHECK(back.layers[l][s] == traces.layers[l][s]);
  }
  std::ostringstream st;
  write_stability_csv(st, analyze_traces(traces));
  CHECK(st.str().rfind("layer,variance,score\n1,", 0) == 0);
  std::istringstream bad("layer,step,f0\n1,1,abc\n");
  CHECK_THROWS(read_traces_csv(bad));
}

TEST_CASE("FLOP counting convention") {
  CHECK(flops_attention(1, 1, 1) == 12);
  CHECK(flops_ffn(1, 1, 1) == 4);
  CHECK(flops_ffn(6, 3, 5) == 6 * flops_ffn(1, 3, 5));
  CHECK(flops_attention(4, 8, 2) == flops_attention(4, 8, 8));
  CHECK(flops_attention_masked(10, 10, 4) == flops_attention(10, 4, 1));
  CHECK(flops_attention_masked(10, 0, 4) == 2 * 2 * 10 * 4 * 4);  // K and V only
  // The score term dominates for s >> d: doubling s roughly quadruples it.
  const double ratio = static_cast<double>(flops_attention(200000, 8, 1)) /
                       static_cast<double>(flops_attention(100000, 8, 1));
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.01));
  CHECK(flops_extrapolate(3, 5) == 30);
}

TEST_CASE("policy costs add up step by step") {
  const CostShape shape = CostShape::cogvideox_5b();
  CHECK(shape.unified_tokens() == 17550);
  const PolicyCost full = flops_policy_run(shape, Policy::full(), 50);
  CHECK(full.speedup_vs_full == 1.0);
  CHECK(full.total_flops == 50 * full.per_step[0]);

  HeroConfig h;
  h.threshold = 20;
  const PolicyCost hero = flops_policy_run(shape, Policy::hero_policy(h), 50);
  uint64_t sum = 0;
  for (uint64_t s : hero.per_step) sum += s;
  CHECK(sum == hero.total_flops);
  CHECK(hero.total_flops < full.total_flops);
  CHECK(hero.speedup_vs_full ==
        doctest::Approx(static_cast<double>(full.total_flops) / hero.total_flops));
}

TEST_CASE("R = 1 with every layer refreshed costs Full minus skipped text rows") {
  CostShape shape = CostShape::cogvideox_5b();
  shape.layers = 4;
  HeroConfig h;
  h.threshold = 5;
  h.ratio = 1.0;
  const PolicyCost full = flops_policy_run(shape, Policy::full(), 6);
  CHECK(flops_policy_run(shape, Policy::hero_policy(h), 6).total_flops == full.total_flops);

  h.text_refresh = TextRefresh::kSkip;
  const PolicyCost skip = flops_policy_run(shape, Policy::hero_policy(h), 6);
  const uint64_t s = shape.sequence(), n = shape.unified_tokens(), d = shape.dim;
  const uint64_t text_saving = (flops_attention(s, d, shape.heads) -
                                flops_attention_masked(s, n, d)) +
                               (flops_ffn(s, d, shape.ffn_dim) - flops_ffn(n, d, shape.ffn_dim));
  const uint64_t followers = 4;  // positions 2, 3, 5, 6
  CHECK(skip.total_flops == full.total_flops - followers * shape.layers * text_saving);
}

TEST_CASE("analytic FLOPs are monotone in K, R and M") {
  const CostShape shape = CostShape::cogvideox_5b();
  HeroConfig h;
  h.threshold = 20;
  uint64_t last = 0;
  for (int k = 5; k <= 35; k += 5) {
    h.threshold = k;
    const uint64_t f = flops_policy_run(shape, Policy::hero_policy(h), 50).total_flops;
    CHECK(f > last);
    last = f;
  }
  h.threshold = 20;
  last = 0;
  for (double r : {0.2, 0.4, 0.6, 0.8}) {
    h.ratio = r;
    const uint64_t f = flops_policy_run(shape, Policy::hero_policy(h), 50).total_flops;
    CHECK(f > last);
    last = f;
  }
  h.ratio = 0.2;
  last = UINT64_MAX;
  for (int m = 1; m <= 5; ++m) {
    h.interval = m;
    const uint64_t f = flops_policy_run(shape, Policy::hero_policy(h), 50).total_flops;
    CHECK(f <= last);
    last = f;
  }
}

}  // namespace
}  // namespace hxr
