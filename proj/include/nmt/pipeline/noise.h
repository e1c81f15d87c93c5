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

#include <span>

#include "nmt/numerics/rng.h"
#include "nmt/seq2seq/vocab.h"

namespace nmt::pipeline {

struct NoiseConfig {
  double p_drop = 0.1;
  double p_blank = 0.1;
  // Tokens move at most this many positions; 0 disables swapping.
  std::size_t swap_window = 3;
  int filler = special::kUnk;

  void validate() const;
  static NoiseConfig none() { return {0.0, 0.0, 0, special::kUnk}; }
};

// Word dropout, then filler replacement, then local shuffling. A non-empty
// input never becomes empty: if every token is dropped one survives.
TokenSequence add_noise(std::span<const int> sentence, const NoiseConfig& cfg, num::Rng& rng);

}  // namespace nmt::pipeline
