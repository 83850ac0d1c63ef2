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
#include <span>
#include <string>
#include <vector>

namespace hxr {

// Dense row-major float32 tensor with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape, float fill = 0.0f);
  Tensor(std::vector<int64_t> shape, std::vector<float> values);

  static Tensor matrix(int64_t rows, int64_t cols, float fill = 0.0f) {
    return Tensor({rows, cols}, fill);
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  int64_t dim(size_t axis) const { return shape_.at(axis); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  // Matrix views; valid for rank-2 tensors.
  int64_t rows() const { return shape_.at(0); }
  int64_t cols() const { return shape_.at(1); }
  std::span<float> row(int64_t r) {
    return std::span<float>(data_).subspan(r * cols(), cols());
  }
  std::span<const float> row(int64_t r) const {
    return std::span<const float>(data_).subspan(r * cols(), cols());
  }
  float& at(int64_t r, int64_t c) { return data_[r * cols() + c]; }
  float at(int64_t r, int64_t c) const { return data_[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

 private:
  std::vector<int64_t> shape_;
  std::vector<float> data_;
};

std::string shape_string(const std::vector<int64_t>& shape);

// Same shape and identical bit patterns.
bool bitwise_equal(const Tensor& a, const Tensor& b);

// ||a - b|| / ||b||, or ||a - b|| when b is all zeros. Accumulates in double.
double relative_l2(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace hxr
