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

#include <functional>
#include <vector>

#include "nmt/numerics/gradcheck.h"
#include "nmt/numerics/graph.h"
#include "nmt/numerics/rng.h"

namespace nmt::testing {

// Max relative error between backward() and central differences for a loss
// built by `build` over the parameters of `store`.
inline double gradient_error(num::ParamStore& store, const std::function<num::NodeId(num::Graph&)>& build,
                             double eps = 1e-5, double floor = 1e-6) {
  num::Graph g;
  num::NodeId out = build(g);
  num::GradientMap analytic = num::backward(g, out);
  std::vector<num::Parameter*> params;
  for (std::size_t i = 0; i < store.size(); ++i) params.push_back(&store[i]);
  auto loss = [&] {
    num::Graph eval(false);
    return eval.value(build(eval)).item();
  };
  num::GradientMap numeric = num::finite_difference_grad(loss, params, eps);
  return num::max_relative_error(analytic, numeric, floor);
}

inline num::Tensor random_matrix(num::Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  num::Tensor t = num::Tensor::matrix(r, c);
  for (double& v : t.values()) v = rng.normal() * scale;
  return t;
}

}  // namespace nmt::testing
