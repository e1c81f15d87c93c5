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

#include "nmt/pipeline/noise.h"

#include <algorithm>
#include <numeric>

#include "nmt/error.h"

namespace nmt::pipeline {

void NoiseConfig::validate() const {
  if (!(p_drop >= 0.0 && p_drop <= 1.0) || !(p_blank >= 0.0 && p_blank <= 1.0)) {
    throw Error("noise probabilities must be in [0, 1]");
  }
}

TokenSequence add_noise(std::span<const int> sentence, const NoiseConfig& cfg, num::Rng& rng) {
  cfg.validate();
  TokenSequence out;
  for (int t : sentence) {
    if (!rng.bernoulli(cfg.p_drop)) out.push_back(t);
  }
  if (out.empty() && !sentence.empty()) out.push_back(sentence[rng.index(sentence.size())]);
  for (int& t : out) {
    if (rng.bernoulli(cfg.p_blank)) t = cfg.filler;
  }
  if (cfg.swap_window > 0 && out.size() > 1) {
    std::vector<double> key(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      key[i] = static_cast<double>(i) + rng.uniform(0.0, static_cast<double>(cfg.swap_window) + 1.0);
    }
    std::vector<std::size_t> order(out.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    TokenSequence shuffled;
    shuffled.reserve(out.size());
    for (std::size_t i : order) shuffled.push_back(out[i]);
    out = std::move(shuffled);
  }
  return out;
}

}  // namespace nmt::pipeline
