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

#include <array>
#include <string>
#include <vector>

#include "nmt/seq2seq/vocab.h"

namespace nmt::eval {

inline constexpr std::size_t kBleuOrder = 4;

struct BleuStats {
  std::array<std::size_t, kBleuOrder> matches{};
  std::array<std::size_t, kBleuOrder> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

BleuStats bleu_stats(const std::vector<TokenSequence>& hyps, const std::vector<TokenSequence>& refs);
BleuStats bleu_stats(const std::vector<std::vector<std::string>>& hyps,
                     const std::vector<std::vector<std::string>>& refs);

// 4-gram corpus BLEU in [0, 100]. Without smoothing any order with no match
// gives 0; `add_one` adds one to numerator and denominator for orders 2-4.
double bleu_from_stats(const BleuStats& s, bool add_one = false);
double corpus_bleu(const std::vector<TokenSequence>& hyps, const std::vector<TokenSequence>& refs,
                   bool add_one = false);
// Whitespace-tokenised text.
double corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, bool add_one = false);

}  // namespace nmt::eval
