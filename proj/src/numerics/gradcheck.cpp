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

#include "nmt/numerics/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "nmt/error.h"

namespace nmt::num {

GradientMap finite_difference_grad(const std::function<double()>& loss_fn,
                                   std::span<Parameter* const> params, double eps) {
  if (!(eps > 0.0)) throw Error("finite_difference_grad: eps must be > 0");
  GradientMap out;
  for (Parameter* p : params) {
    Tensor grad(p->value.shape(), 0.0);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double up = loss_fn();
      p->value[i] = orig - eps;
      const double down = loss_fn();
      p->value[i] = orig;
      grad[i] = (up - down) / (2.0 * eps);
    }
    out[p] = std::move(grad);
  }
  return out;
}

double max_relative_error(const GradientMap& analytic, const GradientMap& numeric, double floor) {
  double worst = 0.0;
  for (const auto& [p, num] : numeric) {
    auto it = analytic.find(p);
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      const double b = num[i];
      const double denom = std::max({std::abs(a), std::abs(b), floor});
      worst = std::max(worst, std::abs(a - b) / denom);
    }
  }
  return worst;
}

}  // namespace nmt::num
