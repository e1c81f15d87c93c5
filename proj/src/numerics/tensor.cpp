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

#include "nmt/numerics/tensor.h"

#include <cmath>
#include <sstream>

#include "nmt/error.h"

namespace nmt::num {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw Error("tensor shape " + shape_string(shape_) + " does not match " +
                std::to_string(data_.size()) + " values");
  }
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 2) return shape_[0];
  return 1;
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  if (shape_.size() == 1) return shape_[0];
  return 1;
}

double Tensor::item() const {
  if (data_.size() != 1) throw Error("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace nmt::num
