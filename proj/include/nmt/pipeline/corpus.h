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

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmt/numerics/rng.h"
#include "nmt/seq2seq/training.h"

namespace nmt::pipeline {

enum class Provenance { bitext, bt, kd, speculation };
std::string_view provenance_name(Provenance p);

struct TaggedPair {
  SentencePair pair;
  Provenance tag = Provenance::bitext;
  // Free-form source label, e.g. the corpus a bitext pair came from.
  std::string origin;
  friend bool operator==(const TaggedPair&, const TaggedPair&) = default;
};

using ParallelCorpus = std::vector<TaggedPair>;

struct MonoCorpus {
  std::vector<TokenSequence> sentences;
  std::string language;
};

ParallelCorpus tag_pairs(const std::vector<SentencePair>& pairs, Provenance tag, const std::string& origin = "");
std::vector<SentencePair> pairs_of(const ParallelCorpus& corpus);

// Each part repeated `factor` times, then shuffled.
ParallelCorpus mix_corpora(const std::vector<std::pair<ParallelCorpus, std::size_t>>& parts, num::Rng& rng);

// `shards` samples of ceil(|mono| / shards) sentences, each drawn with
// replacement.
std::vector<std::vector<TokenSequence>> shard_with_replacement(const std::vector<TokenSequence>& mono,
                                                               std::size_t shards, num::Rng& rng);

}  // namespace nmt::pipeline
