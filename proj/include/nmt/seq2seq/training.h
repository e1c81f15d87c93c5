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
#include <vector>

#include "nmt/numerics/adam.h"
#include "nmt/seq2seq/model.h"

namespace nmt {

struct SentencePair {
  TokenSequence src;
  TokenSequence tgt;
  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

// Mean over the batch of per-sentence NLL (EOS included).
num::NodeId batch_nll(num::Graph& g, const Model& model, std::span<const SentencePair> batch,
                      const ForwardOptions& opt = {});

// One Adam update on `batch`; returns the batch loss before the update.
double train_step(Model& model, num::Adam& adam, std::span<const SentencePair> batch, num::Rng& rng);

// Shuffles `data` with `rng` and runs one pass; returns the mean batch loss.
double train_epoch(Model& model, num::Adam& adam, std::vector<SentencePair> data, std::size_t batch_size,
                   num::Rng& rng);

// Mean per-sentence NLL without dropout.
double corpus_nll(const Model& model, std::span<const SentencePair> data);

std::vector<SentencePair> reversed_pairs(std::span<const SentencePair> data);

}  // namespace nmt
