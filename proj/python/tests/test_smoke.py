# Copyright 2026 The hxr Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================

import json

import numpy as np
import pytest

import hxr


def small_model():
    cfg = hxr.ModelConfig()
    cfg.layers = 3
    cfg.dim = 32
    cfg.heads = 2
    cfg.ffn_dim = 64
    return cfg


def test_concat_split_roundtrip():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((2, 4, 6, 4)).astype(np.float32)
    d = rng.standard_normal((2, 4, 6, 2)).astype(np.float32)
    c = rng.standard_normal((2, 4, 6, 1)).astype(np.float32)
    z = hxr.concat_modalities(v, d, c)
    assert z.shape == (2, 4, 6, 7)
    back = hxr.split_modalities(z, 4, 2, 1)
    np.testing.assert_array_equal(back["video"], v)
    np.testing.assert_array_equal(back["depth"], d)
    np.testing.assert_array_equal(back["camera"], c)


def test_concat_rejects_mismatched_grid():
    v = np.zeros((2, 4, 6, 4), np.float32)
    d = np.zeros((2, 4, 5, 2), np.float32)
    c = np.zeros((2, 4, 6, 1), np.float32)
    with pytest.raises(hxr.StructuralError):
        hxr.concat_modalities(v, d, c)


def test_degenerate_hero_matches_full():
    cfg = small_model()
    model = hxr.ToyMMDiT(cfg)
    inputs = hxr.make_inputs(cfg, 3)
    hero = hxr.HeroConfig()
    hero.threshold = cfg.layers + 1
    hero.ratio = 1.0
    args = (inputs["video"], inputs["depth"], inputs["camera"], inputs["text"])
    full = hxr.run_denoising(model, "full", 6, *args)
    approx = hxr.run_denoising(model, "hero", 6, *args, hero=hero)
    np.testing.assert_array_equal(full["unified"], approx["unified"])


def test_hero_saves_flops_and_reports_steps():
    cfg = small_model()
    model = hxr.ToyMMDiT(cfg)
    inputs = hxr.make_inputs(cfg, 0)
    hero = hxr.HeroConfig()
    hero.threshold = 2
    args = (inputs["video"], inputs["depth"], inputs["camera"], inputs["text"])
    full = hxr.run_denoising(model, "full", 6, *args)
    fast = hxr.run_denoising(model, "hero", 6, *args, hero=hero, trace=True)
    assert fast["total_flops"] < full["total_flops"]
    assert [s["anchor"] for s in fast["steps"]] == [True, False, False] * 2
    assert len(fast["traces"]) == cfg.layers
    assert fast["traces"][0].shape == (6, cfg.dim)


def test_variance_and_scores():
    assert hxr.second_order_variance([[0.0], [0.0], [1.0], [0.0], [0.0]]) == 2.0
    assert hxr.stability_scores([1.0, 3.0, 2.0]) == [1.0, 0.0, 0.5]
    with pytest.raises(hxr.ContractError):
        hxr.second_order_variance([[0.0], [1.0]])


def test_flops_and_schedule():
    assert hxr.flops_ffn(1, 1, 1) == 4
    assert hxr.build_schedule(5, 2) == [(1, [2, 3]), (4, [5])]
    cost = hxr.flops_policy_run("cogvideox5b", "full", hxr.HeroConfig(), 50)
    assert cost["speedup_vs_full"] == 1.0
    assert cost["total_flops"] == sum(cost["per_step"])


def test_config_and_report():
    cfg = hxr.parse_config("[model]\nlayers = 3\ndim = 32\nheads = 2\n[run]\nsteps = 4\n")
    assert cfg.model.layers == 3
    cfg.set("run.policy", "uniform_reuse")
    with pytest.raises(hxr.ConfigError, match="hero.bogus"):
        cfg.set("hero.bogus", "1")
    report = json.loads(hxr.execute_run(cfg))
    assert report["schema_version"] == 1
    assert report["policy"] == "uniform_reuse"
    assert "wall_clock" not in report
    assert report["flops"]["speedup_vs_full"] > 1.0
    again = hxr.execute_run(cfg)
    assert again == hxr.execute_run(cfg)
