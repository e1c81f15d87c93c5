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

#include "nmt/pipeline/corpus.h"

namespace nmt::pipeline {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::bitext: return "bitext";
    case Provenance::bt: return "bt";
    case Provenance::kd: return "kd";
    case Provenance::speculation: return "speculation";
  }
  return "?";
}

ParallelCorpus tag_pairs(const std::vector<SentencePair>& pairs, Provenance tag, const std::string& origin) {
  ParallelCorpus out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p, tag, origin});
  return out;
}

std::vector<SentencePair> pairs_of(const ParallelCorpus& corpus) {
  std::vector<SentencePair> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) out.push_back(t.pair);
  return out;
}

ParallelCorpus mix_corpora(const std::vector<std::pair<ParallelCorpus, std::size_t>>& parts, num::Rng& rng) {
  ParallelCorpus out;
  for (const auto& [corpus, factor] : parts) {
    if (factor < 1) throw Error("up-sampling factor must be >= 1");
    for (std::size_t f = 0; f < factor; ++f) out.insert(out.end(), corpus.begin(), corpus.end());
  }
  rng.shuffle(out);
  return out;
}

std::vector<std::vector<TokenSequence>> shard_with_replacement(const std::vector<TokenSequence>& mono,
                                                               std::size_t shards, num::Rng& rng) {
  if (shards == 0) throw Error("shard count must be positive");
  std::vector<std::vector<TokenSequence>> out(shards);
  if (mono.empty()) return out;
  const std::size_t size = (mono.size() + shards - 1) / shards;
  for (auto& shard : out) {
    for (std::size_t i = 0; i < size; ++i) shard.push_back(mono[rng.index(mono.size())]);
  }
  return out;
}

}  // namespace nmt::pipeline
