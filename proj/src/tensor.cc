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

#include "hxr/tensor.h"

#include <cmath>
#include <cstring>
#include <numeric>

#include "hxr/error.h"

namespace hxr {
namespace {

size_t element_count(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw StructuralError("negative dimension in " + shape_string(shape));
    n *= d;
  }
  return static_cast<size_t>(n);
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape, float fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != element_count(shape_)) {
    throw StructuralError("tensor of shape " + shape_string(shape_) + " given " +
                          std::to_string(data_.size()) + " values");
  }
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_string(const std::vector<int64_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  return a.numel() == 0 ||
         std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)) == 0;
}

double relative_l2(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "relative_l2");
  double diff = 0.0;
  double ref = 0.0;
  auto av = a.data();
  auto bv = b.data();
  for (size_t i = 0; i < av.size(); ++i) {
    double d = static_cast<double>(av[i]) - bv[i];
    diff += d * d;
    ref += static_cast<double>(bv[i]) * bv[i];
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw StructuralError(std::string(what) + ": shape " + shape_string(a.shape()) +
                          " does not match " + shape_string(b.shape()));
  }
}

}  // namespace hxr
