/* desknmt - a desk-scale neural machine translation research toolkit.
 * Copyright (C) 2026 The desknmt Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nmt::num {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. A rank-0 tensor holds one scalar.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor(Shape{rows, cols}, fill);
  }
  static Tensor vector(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor(Shape{n}, std::move(v));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view helpers: rank-1 tensors behave as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double item() const;

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace nmt::num
