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
#include <span>

#include "nmt/numerics/parameter.h"

namespace nmt::num {

// Central differences (f(p+eps) - f(p-eps)) / (2 eps) for every scalar of
// every listed parameter. `loss_fn` must read the parameters' current values
// and be deterministic. Parameters are restored bit-exactly afterwards.
GradientMap finite_difference_grad(const std::function<double()>& loss_fn,
                                   std::span<Parameter* const> params, double eps);

// Largest |a - b| / max(|a|, |b|, floor) over all entries present in `numeric`.
// Missing analytic entries count as zero gradients.
double max_relative_error(const GradientMap& analytic, const GradientMap& numeric,
                          double floor = 1e-6);

}  // namespace nmt::num
