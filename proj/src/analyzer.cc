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

#include "hxr/analyzer.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hxr/error.h"

namespace hxr {

void TraceRecorder::begin_step() {
  for (auto& layer : traces_.layers) layer.emplace_back(dim_, 0.0f);
}

void TraceRecorder::add(int layer, const Tensor& g) {
  if (layer < 1 || layer > layers_) throw ContractError("trace layer out of range");
  if (g.rank() != 2 || g.cols() != dim_) throw StructuralError("trace features have wrong width");
  auto& slot = traces_.layers[layer - 1];
  if (slot.empty()) throw StateError("begin_step must precede add");
  std::vector<double> mean(dim_, 0.0);
  for (int64_t r = 0; r < g.rows(); ++r) {
    auto row = g.row(r);
    for (int c = 0; c < dim_; ++c) mean[c] += row[c];
  }
  auto& summary = slot.back();
  for (int c = 0; c < dim_; ++c) {
    summary[c] += static_cast<float>(mean[c] / static_cast<double>(std::max<int64_t>(g.rows(), 1)));
  }
}

double second_order_variance(const FeatureTrace& trace) {
  if (trace.size() < 3) {
    throw ContractError("second-order variance needs at least 3 steps, got " +
                        std::to_string(trace.size()));
  }
  const size_t dims = trace.front().size();
  for (const auto& step : trace) {
    if (step.size() != dims) throw StructuralError("trace steps have differing widths");
  }
  if (dims == 0) return 0.0;
  const size_t n = trace.size() - 2;
  double total = 0.0;
  std::vector<double> diffs(n);
  for (size_t c = 0; c < dims; ++c) {
    for (size_t t = 0; t < n; ++t) {
      diffs[t] = static_cast<double>(trace[t + 2][c]) - 2.0 * trace[t + 1][c] + trace[t][c];
    }
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : diffs) var += (v - mean) * (v - mean);
    total += var / static_cast<double>(n);
  }
  return total / static_cast<double>(dims);
}

StabilityScores stability_scores(std::span<const double> variances) {
  StabilityScores out;
  out.variance.assign(variances.begin(), variances.end());
  out.score.assign(variances.size(), 1.0);
  if (variances.empty()) return out;
  const auto [lo, hi] = std::minmax_element(variances.begin(), variances.end());
  const double range = *hi - *lo;
  if (range <= 0.0) return out;
  for (size_t i = 0; i < variances.size(); ++i) {
    out.score[i] = std::clamp(1.0 - (variances[i] - *lo) / range, 0.0, 1.0);
  }
  // Pin the endpoints exactly.
  out.score[hi - variances.begin()] = 0.0;
  out.score[lo - variances.begin()] = 1.0;
  return out;
}

StabilityScores analyze_traces(const LayerTraces& traces) {
  std::vector<double> vars;
  vars.reserve(traces.layers.size());
  for (const auto& layer : traces.layers) vars.push_back(second_order_variance(layer));
  return stability_scores(vars);
}

std::vector<int> rank_by_stability(const StabilityScores& scores) {
  std::vector<int> order(scores.score.size());
  std::iota(order.begin(), order.end(), 1);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores.score[a - 1] > scores.score[b - 1];
  });
  return order;
}

void write_traces_csv(std::ostream& out, const LayerTraces& traces) {
  const size_t dims = traces.empty() || traces.layers.front().empty()
                          ? 0
                          : traces.layers.front().front().size();
  out << "layer,step";
  for (size_t c = 0; c < dims; ++c) out << ",f" << c;
  out << "\n";
  auto old_precision = out.precision(9);
  for (size_t l = 0; l < traces.layers.size(); ++l) {
    for (size_t t = 0; t < traces.layers[l].size(); ++t) {
      out << (l + 1) << "," << (t + 1);
      for (float v : traces.layers[l][t]) out << "," << v;
      out << "\n";
    }
  }
  out.precision(old_precision);
}

LayerTraces read_traces_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("layer,step", 0) != 0) {
    throw StructuralError("trace CSV must start with a 'layer,step,...' header");
  }
  LayerTraces traces;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw StructuralError("trace CSV line " + std::to_string(line_no) + " is short");
    int layer = 0, step = 0;
    std::vector<float> values;
    try {
      layer = std::stoi(cells[0]);
      step = std::stoi(cells[1]);
      for (size_t i = 2; i < cells.size(); ++i) values.push_back(std::stof(cells[i]));
    } catch (const std::exception&) {
      throw StructuralError("trace CSV line " + std::to_string(line_no) + " is not numeric");
    }
    if (layer < 1 || step < 1) throw StructuralError("trace CSV indices are 1-based");
    if (static_cast<size_t>(layer) > traces.layers.size()) traces.layers.resize(layer);
    auto& trace = traces.layers[layer - 1];
    if (static_cast<size_t>(step) != trace.size() + 1) {
      throw StructuralError("trace CSV line " + std::to_string(line_no) +
                            ": steps must be consecutive per layer");
    }
    trace.push_back(std::move(values));
  }
  for (size_t l = 0; l < traces.layers.size(); ++l) {
    if (traces.layers[l].empty()) throw StructuralError("trace CSV has no rows for layer " + std::to_string(l + 1));
  }
  return traces;
}

void write_stability_csv(std::ostream& out, const StabilityScores& scores) {
  out << "layer,variance,score\n";
  auto old_precision = out.precision(9);
  for (size_t i = 0; i < scores.score.size(); ++i) {
    out << (i + 1) << "," << scores.variance[i] << "," << scores.score[i] << "\n";
  }
  out.precision(old_precision);
}

}  // namespace hxr
