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

#include <iosfwd>
#include <string>
#include <vector>

#include "nmt/seq2seq/beam.h"

namespace nmt::eval {

struct ScoredHypothesis {
  TokenSequence tokens;
  double gen_score = 0.0;       // generation log-probability
  std::vector<double> scores;   // one per attached scorer
};

// Per source sentence, hypotheses in generation order.
using NBestList = std::vector<std::vector<ScoredHypothesis>>;

NBestList from_hypotheses(const std::vector<std::vector<Hypothesis>>& hyps);

struct RerankConfig {
  std::vector<double> weights;
  double length_weight = 0.0;  // lambda, times hypothesis length
  friend bool operator==(const RerankConfig&, const RerankConfig&) = default;
};

// Index of the chosen hypothesis per sentence: argmax of sum_k w_k s_k +
// lambda * length, earliest hypothesis on ties.
std::vector<std::size_t> rerank(const NBestList& nbest, const RerankConfig& cfg);
std::vector<TokenSequence> rerank_tokens(const NBestList& nbest, const RerankConfig& cfg);

struct Scorer {
  const Model* model;
  bool reversed = false;
};

// Appends one score per scorer (score_sequence with the scorer's direction).
// `sources[i]` is the source of nbest[i].
void attach_scores(NBestList& nbest, const std::vector<TokenSequence>& sources, const std::vector<Scorer>& scorers);

// Exhaustive grid search maximising corpus BLEU. Ties keep the smallest
// lambda, then the lexicographically smallest weight vector.
RerankConfig tune_rerank(const NBestList& nbest, const std::vector<TokenSequence>& refs,
                         std::vector<std::vector<double>> weight_grid, std::vector<double> lambda_grid);

// Cartesian product of `values` over `k` scorers, skipping the all-zero point.
std::vector<std::vector<double>> weight_grid(std::size_t k, const std::vector<double>& values);

// TSV: sent_id, hyp_rank, space-separated token ids, gen_score, scores...
void write_nbest(std::ostream& out, const NBestList& nbest);
NBestList read_nbest(std::istream& in);

}  // namespace nmt::eval
