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

#include <map>
#include <string>
#include <utility>

#include "nmt/numerics/parameter.h"

namespace nmt::num {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Updates every parameter of `params` that has an entry in `grads`; others
  // are left untouched. Returns the pre-clip global gradient norm.
  double step(ParamStore& params, const GradientMap& grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

}  // namespace nmt::num
