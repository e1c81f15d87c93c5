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

#include <cstdint>
#include <string>
#include <vector>

namespace nmt::app {

struct GradCheck {
  std::string name;
  std::size_t params = 0;      // scalars checked
  double max_rel_error = 0.0;  // against central differences
  double seconds = 0.0;
  bool pass = false;
};

// Analytic vs central-difference gradients (eps 1e-5, pass below 1e-4) on
// tiny models for: baseline NLL, MASS unsupervised and supervised losses,
// MADL objective, SCA-augmented NLL, NAO predictor.
std::vector<GradCheck> run_gradient_suite(std::uint64_t seed, double eps = 1e-5, double tolerance = 1e-4);

std::string gradient_table(const std::vector<GradCheck>& checks);

}  // namespace nmt::app
