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
#include "nmt/numerics/checkpoint.h"
#include "nmt/seq2seq/model.h"
#include "nmt/seq2seq/training.h"

namespace nmt::sca {

// Distribution over the vocabulary.
using SoftWord = std::vector<double>;

struct LmConfig {
  std::size_t vocab = 0;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 64;
  std::size_t layers = 1;
  double dropout = 0.0;
  std::size_t max_len = 64;

  void validate() const;
  friend bool operator==(const LmConfig&, const LmConfig&) = default;
};

// Decoder-only Transformer language model.
class CausalLM {
 public:
  CausalLM(LmConfig config, std::uint64_t seed);

  const LmConfig& config() const { return config_; }
  num::ParamStore& params() { return params_; }
  const num::ParamStore& params() const { return params_; }

  // Logits [|ids| x V] for input BOS + ids[0..n-1): row t scores token t.
  num::NodeId logits(num::Graph& g, std::span<const int> ids, const ForwardOptions& opt = {}) const;
  // -sum_t log P(x_t | x_<t), EOS included.
  num::NodeId nll(num::Graph& g, std::span<const int> sentence, const ForwardOptions& opt = {}) const;

  // P(. | prefix) with BOS prepended.
  SoftWord distribution(std::span<const int> prefix, double temperature = 1.0) const;
  // P(. | x_<t) for every position t of `sentence`, from one forward pass.
  std::vector<SoftWord> position_distributions(std::span<const int> sentence, double temperature = 1.0) const;

  num::Checkpoint to_checkpoint() const;
  static CausalLM from_checkpoint(const num::Checkpoint& ckpt);

 private:
  LmConfig config_;
  std::uint64_t seed_;
  num::ParamStore params_;
};

struct LmTrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  num::AdamConfig adam{.lr = 1e-3};
};

CausalLM train_lm(const std::vector<TokenSequence>& corpus, const LmConfig& config, const LmTrainConfig& train,
                  std::uint64_t seed);
double lm_perplexity(const CausalLM& lm, const std::vector<TokenSequence>& corpus);

// sum_j p_j E_j.
std::vector<double> soft_embedding(std::span<const double> dist, const num::Tensor& embeddings);

struct AugmentConfig {
  double gamma = 0.15;
  double temperature = 1.0;
};

// Each source position independently becomes soft with probability gamma.
SoftInputs augment_source(const CausalLM& lm, std::span<const int> source, const AugmentConfig& cfg, num::Rng& rng);

// One Adam step on the SCA-augmented batch loss. Replacement draws come from
// `aug` when given, otherwise from `rng` (which also drives dropout).
double train_step(Model& model, num::Adam& adam, std::span<const SentencePair> batch, const CausalLM& lm,
                  const AugmentConfig& cfg, num::Rng& rng, num::Rng* aug = nullptr);
double train_epoch(Model& model, num::Adam& adam, std::vector<SentencePair> data, std::size_t batch_size,
                   const CausalLM& lm, const AugmentConfig& cfg, num::Rng& rng, num::Rng* aug = nullptr);

}  // namespace nmt::sca
