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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hxr/analyzer.h"
#include "hxr/cache_policy.h"
#include "hxr/config.h"
#include "hxr/error.h"
#include "hxr/flops.h"
#include "hxr/harness.h"
#include "hxr/report.h"
#include "hxr/toy_mmdit.h"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

hxr::Tensor to_tensor(const FloatArray& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return hxr::Tensor(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const hxr::Tensor& t) {
  py::array_t<float> out(t.shape());
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict bundle_dict(const hxr::LatentBundle& b) {
  py::dict d;
  d["video"] = to_array(b.video);
  d["depth"] = to_array(b.depth);
  d["camera"] = to_array(b.camera);
  return d;
}

hxr::Policy make_policy(const std::string& name, const hxr::HeroConfig& hero) {
  const auto kind = hxr::parse_policy(name);
  if (!kind) throw hxr::ConfigError("policy", "unknown policy '" + name + "'");
  switch (*kind) {
    case hxr::PolicyKind::kFull:
      return hxr::Policy::full();
    case hxr::PolicyKind::kHero:
      return hxr::Policy::hero_policy(hero);
    case hxr::PolicyKind::kUniformReuse:
      return hxr::Policy::uniform_reuse(hero.interval);
    case hxr::PolicyKind::kUniformExtrapolation:
      return hxr::Policy::uniform_extrapolation(hero.interval);
  }
  return hxr::Policy::full();
}

py::list traces_list(const hxr::LayerTraces& traces) {
  py::list layers;
  for (const auto& layer : traces.layers) {
    py::array_t<float> a({static_cast<py::ssize_t>(layer.size()),
                          static_cast<py::ssize_t>(layer.empty() ? 0 : layer.front().size())});
    float* dst = a.mutable_data();
    for (const auto& step : layer) dst = std::copy(step.begin(), step.end(), dst);
    layers.append(a);
  }
  return layers;
}

}  // namespace

PYBIND11_MODULE(_hxr, m) {
  m.doc() = "Cached inference policies for a toy multi-modal diffusion transformer.";

  auto base = py::register_exception<hxr::Error>(m, "Error");
  py::register_exception<hxr::StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<hxr::NumericError>(m, "NumericError", base.ptr());
  py::register_exception<hxr::ContractError>(m, "ContractError", base.ptr());
  py::register_exception<hxr::StateError>(m, "StateError", base.ptr());
  py::register_exception<hxr::ConfigError>(m, "ConfigError", base.ptr());

  py::class_<hxr::ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("layers", &hxr::ModelConfig::layers)
      .def_readwrite("dim", &hxr::ModelConfig::dim)
      .def_readwrite("heads", &hxr::ModelConfig::heads)
      .def_readwrite("ffn_dim", &hxr::ModelConfig::ffn_dim)
      .def_readwrite("frames", &hxr::ModelConfig::frames)
      .def_readwrite("height", &hxr::ModelConfig::height)
      .def_readwrite("width", &hxr::ModelConfig::width)
      .def_readwrite("video_channels", &hxr::ModelConfig::video_channels)
      .def_readwrite("depth_channels", &hxr::ModelConfig::depth_channels)
      .def_readwrite("camera_channels", &hxr::ModelConfig::camera_channels)
      .def_readwrite("embed_h", &hxr::ModelConfig::embed_h)
      .def_readwrite("embed_w", &hxr::ModelConfig::embed_w)
      .def_readwrite("text_tokens", &hxr::ModelConfig::text_tokens)
      .def_readwrite("text_dim", &hxr::ModelConfig::text_dim)
      .def_readwrite("seed", &hxr::ModelConfig::seed)
      .def_readwrite("positional_encoding", &hxr::ModelConfig::positional_encoding)
      .def_readwrite("time_embedding", &hxr::ModelConfig::time_embedding)
      .def_readwrite("noise_layers", &hxr::ModelConfig::noise_layers)
      .def_readwrite("noise_sigma", &hxr::ModelConfig::noise_sigma)
      .def_readwrite("noise_seed", &hxr::ModelConfig::noise_seed)
      .def_property_readonly("unified_tokens", &hxr::ModelConfig::unified_tokens)
      .def("validate", &hxr::ModelConfig::validate);

  py::class_<hxr::HeroConfig>(m, "HeroConfig")
      .def(py::init<>())
      .def_readwrite("interval", &hxr::HeroConfig::interval)
      .def_readwrite("threshold", &hxr::HeroConfig::threshold)
      .def_readwrite("ratio", &hxr::HeroConfig::ratio)
      .def_readwrite("patch_h", &hxr::HeroConfig::patch_h)
      .def_readwrite("patch_w", &hxr::HeroConfig::patch_w)
      .def_readwrite("max_age", &hxr::HeroConfig::max_age)
      .def_readwrite("rng_seed", &hxr::HeroConfig::rng_seed)
      .def_property_readonly("effective_max_age", &hxr::HeroConfig::effective_max_age);

  py::class_<hxr::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("model", &hxr::RunConfig::model)
      .def_readwrite("hero", &hxr::RunConfig::hero)
      .def_readwrite("policy", &hxr::RunConfig::policy)
      .def_readwrite("steps", &hxr::RunConfig::steps)
      .def_readwrite("seed", &hxr::RunConfig::seed)
      .def_readwrite("seeds", &hxr::RunConfig::seeds)
      .def_readwrite("step_size", &hxr::RunConfig::step_size)
      .def_readwrite("trace", &hxr::RunConfig::trace)
      .def_readwrite("out_dir", &hxr::RunConfig::out_dir)
      .def("set", [](hxr::RunConfig& c, const std::string& key,
                     const std::string& value) { hxr::apply_setting(c, key, value); })
      .def("set_seed", &hxr::RunConfig::set_seed)
      .def("validate", &hxr::RunConfig::validate)
      .def("to_text", [](const hxr::RunConfig& c) {
        std::ostringstream out;
        hxr::write_config(out, c);
        return out.str();
      });

  m.def("parse_config", [](const std::string& text) {
    std::istringstream in(text);
    return hxr::parse_config(in);
  });
  m.def("load_config", &hxr::load_config, py::arg("path"));

  m.def(
      "concat_modalities",
      [](const FloatArray& video, const FloatArray& depth, const FloatArray& camera) {
        return to_array(hxr::concat_modalities({to_tensor(video), to_tensor(depth), to_tensor(camera)}).z);
      },
      py::arg("video"), py::arg("depth"), py::arg("camera"));
  m.def(
      "split_modalities",
      [](const FloatArray& z, int video, int depth, int camera) {
        return bundle_dict(hxr::split_modalities({to_tensor(z)}, video, depth, camera));
      },
      py::arg("z"), py::arg("video_channels"), py::arg("depth_channels"), py::arg("camera_channels"));

  py::class_<hxr::ToyMMDiT>(m, "ToyMMDiT")
      .def(py::init<hxr::ModelConfig>(), py::arg("config"))
      .def_property_readonly("config", &hxr::ToyMMDiT::config)
      .def(
          "forward",
          [](const hxr::ToyMMDiT& model, const FloatArray& latent, const FloatArray& text, int t) {
            return to_array(hxr::full_forward(model, {to_tensor(latent)}, to_tensor(text), t).z);
          },
          py::arg("latent"), py::arg("text"), py::arg("t"),
          "Uncached pass over a unified latent [f, h, w, C]; returns the same shape.")
      .def(
          "attention_row",
          [](const hxr::ToyMMDiT& model, const FloatArray& latent, const FloatArray& text, int t,
             int layer, int head, int query) {
            const hxr::TokenState state = model.embed({to_tensor(latent)}, to_tensor(text), t);
            return model.attention_row(state, layer, head, query);
          },
          py::arg("latent"), py::arg("text"), py::arg("t"), py::arg("layer"), py::arg("head"),
          py::arg("query"));

  m.def("make_inputs", [](const hxr::ModelConfig& model, uint64_t seed) {
    const hxr::RunInputs in = hxr::make_inputs(model, seed);
    py::dict d = bundle_dict(in.latents);
    d["text"] = to_array(in.text);
    return d;
  });

  m.def(
      "run_denoising",
      [](const hxr::ToyMMDiT& model, const std::string& policy, int steps, const FloatArray& video,
         const FloatArray& depth, const FloatArray& camera, const FloatArray& text,
         const hxr::HeroConfig& hero, float step_size, bool trace) {
        hxr::RunOptions options;
        options.step_size = step_size;
        options.trace = trace;
        const hxr::Policy p = make_policy(policy, hero);
        const hxr::LatentBundle initial{to_tensor(video), to_tensor(depth), to_tensor(camera)};
        const hxr::Tensor tokens = to_tensor(text);
        const hxr::RunResult r = [&] {
          py::gil_scoped_release release;
          return hxr::run_denoising(model, p, steps, initial, tokens, options);
        }();
        py::dict d;
        d["policy"] = r.policy;
        d["latents"] = bundle_dict(r.final_latents);
        d["unified"] = to_array(r.final_unified.z);
        d["total_flops"] = r.total_flops;
        py::list steps_out;
        for (const auto& s : r.steps) {
          py::dict row;
          row["position"] = s.position;
          row["timestep"] = s.timestep;
          row["anchor"] = s.anchor;
          row["flops"] = s.flops;
          row["selected"] = s.selected;
          row["forced"] = s.forced;
          row["mean_age"] = s.mean_age;
          steps_out.append(row);
        }
        d["steps"] = steps_out;
        d["traces"] = traces_list(r.traces);
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("model"), py::arg("policy"), py::arg("steps"), py::arg("video"), py::arg("depth"),
      py::arg("camera"), py::arg("text"), py::arg("hero") = hxr::HeroConfig{},
      py::arg("step_size") = 0.1f, py::arg("trace") = false);

  m.def("build_schedule", [](int steps, int interval) {
    std::vector<std::pair<int, std::vector<int>>> out;
    for (const auto& g : hxr::build_schedule(steps, interval).groups) out.emplace_back(g.anchor, g.followers);
    return out;
  });

  m.def("flops_attention", &hxr::flops_attention, py::arg("seq"), py::arg("dim"), py::arg("heads"));
  m.def("flops_ffn", &hxr::flops_ffn, py::arg("tokens"), py::arg("dim"), py::arg("ffn_dim"));
  m.def(
      "flops_policy_run",
      [](const std::string& shape, const std::string& policy, const hxr::HeroConfig& hero,
         int steps) {
        const hxr::PolicyCost c =
            hxr::flops_policy_run(hxr::preset_shape(shape), make_policy(policy, hero), steps);
        py::dict d;
        d["policy"] = c.policy;
        d["per_step"] = c.per_step;
        d["total_flops"] = c.total_flops;
        d["full_flops"] = c.full_flops;
        d["speedup_vs_full"] = c.speedup_vs_full;
        return d;
      },
      py::arg("shape"), py::arg("policy"), py::arg("hero"), py::arg("steps") = 50);

  m.def("second_order_variance", [](const std::vector<std::vector<float>>& trace) {
    return hxr::second_order_variance(trace);
  });
  m.def("stability_scores", [](const std::vector<double>& variances) {
    const hxr::StabilityScores s = hxr::stability_scores(variances);
    return s.score;
  });

  m.def(
      "execute_run",
      [](const hxr::RunConfig& config, bool wall_clock) {
        py::gil_scoped_release release;
        return hxr::report_json(hxr::execute_run(config), wall_clock);
      },
      py::arg("config"), py::arg("wall_clock") = false,
      "Runs the configured policy plus a full reference; returns the JSON report.");
}
