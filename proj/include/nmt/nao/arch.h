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

#include <vector>

#include "nmt/seq2seq/genotype.h"

namespace nmt::nao {

// Token ids: 0..kInputTokens-1 name a branch input, the rest name an op in
// kAllOps order.
inline constexpr int kInputTokens = static_cast<int>(kDecoderNodes);
inline constexpr int kArchVocab = kInputTokens + static_cast<int>(kAllOps.size());

using ArchSequence = std::vector<int>;

inline int op_token(OpKind op) { return kInputTokens + static_cast<int>(op); }
inline bool is_op_token(int t) { return t >= kInputTokens && t < kArchVocab; }

struct ArchSlot {
  Side side;
  std::size_t layer;
  std::size_t node;
  std::size_t branch;
  bool is_op;
};

// Encoder layers first, then decoder layers; per branch an input token then
// an op token.
std::vector<ArchSlot> arch_slots(std::size_t layers);
std::size_t arch_length(std::size_t layers);

// Tokens legal at a slot.
std::vector<int> allowed_tokens(const ArchSlot& slot);

ArchSequence encode_genotype(const Genotype& g);
// Throws GenotypeError naming the position of the first illegal token.
Genotype decode_genotype(const ArchSequence& seq, std::size_t layers);

}  // namespace nmt::nao
