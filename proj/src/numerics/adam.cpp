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

#include "nmt/numerics/adam.h"

#include <cmath>

#include "nmt/error.h"

namespace nmt::num {

double Adam::step(ParamStore& params, const GradientMap& grads) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = grads.find(&params[i]);
    if (it == grads.end()) continue;
    for (double v : it->second.values()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient norm in Adam step");
  const double clip = (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.requires_grad) continue;
    auto it = grads.find(&p);
    if (it == grads.end()) continue;
    const Tensor& grad = it->second;
    auto [mit, inserted] = moments_.try_emplace(p.name);
    if (inserted) {
      mit->second.first = Tensor(p.value.shape(), 0.0);
      mit->second.second = Tensor(p.value.shape(), 0.0);
    }
    Tensor& m = mit->second.first;
    Tensor& v = mit->second.second;
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double gj = grad[j] * clip;
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      p.value[j] -= cfg_.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
    }
  }
  return norm;
}

}  // namespace nmt::num
