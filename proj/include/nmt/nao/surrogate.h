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

#include "nmt/nao/arch.h"
#include "nmt/numerics/adam.h"
#include "nmt/numerics/checkpoint.h"
#include "nmt/numerics/graph.h"
#include "nmt/numerics/rng.h"

namespace nmt::nao {

using ArchEmbedding = std::vector<double>;

struct SurrogateConfig {
  std::size_t layers = 2;    // genotype depth the surrogate reads
  std::size_t d_arch = 64;
  std::size_t d_hidden = 64;  // predictor hidden width; 0 gives a linear predictor
  double recon_weight = 1.0;

  void validate() const;
};

// Training example: architecture and its normalised score.
struct ArchExample {
  ArchSequence arch;
  double y;
};

struct SurrogateLoss {
  double total;
  double mse;
  double recon;  // mean token NLL
};

// Recurrent encoder (tanh cell, mean pooled), MLP accuracy predictor and a
// recurrent decoder conditioned on the embedding.
class Surrogate {
 public:
  Surrogate(SurrogateConfig cfg, std::uint64_t seed);

  const SurrogateConfig& config() const { return cfg_; }
  num::ParamStore& params() { return params_; }
  const num::ParamStore& params() const { return params_; }

  ArchEmbedding encode(const ArchSequence& arch) const;
  double predict(const ArchEmbedding& e) const;
  // df/de.
  ArchEmbedding predict_grad(const ArchEmbedding& e) const;
  // Greedy decoding restricted to legal tokens at every slot.
  ArchSequence decode(const ArchEmbedding& e) const;

  // Graph pieces, batched over rows.
  num::NodeId encode_graph(num::Graph& g, const std::vector<ArchSequence>& archs) const;
  num::NodeId predict_graph(num::Graph& g, num::NodeId e) const;
  // Mean per-token NLL of `archs` under teacher forcing.
  num::NodeId recon_graph(num::Graph& g, num::NodeId e, const std::vector<ArchSequence>& archs) const;
  num::NodeId loss_graph(num::Graph& g, const std::vector<ArchExample>& batch, SurrogateLoss* parts = nullptr) const;

  num::Checkpoint to_checkpoint() const;
  static Surrogate from_checkpoint(const num::Checkpoint& ckpt);

 private:
  void check_arch(const ArchSequence& arch) const;
  num::NodeId p(num::Graph& g, const char* name) const;

  SurrogateConfig cfg_;
  std::vector<ArchSlot> slots_;
  std::vector<std::vector<int>> legal_;
  num::ParamStore params_;
};

// e + eta * df/de; eta = 0 returns e unchanged.
ArchEmbedding ascend(const Surrogate& s, const ArchEmbedding& e, double eta);

struct SurrogateTrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 32;
  num::AdamConfig adam{.lr = 3e-3};
};

// Returns the loss over the full set after the last epoch.
SurrogateLoss fit_surrogate(Surrogate& s, const std::vector<ArchExample>& data, const SurrogateTrainConfig& cfg,
                            num::Rng& rng);

double reconstruction_accuracy(const Surrogate& s, const std::vector<ArchSequence>& archs);

}  // namespace nmt::nao
