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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nmt/numerics/checkpoint.h"
#include "nmt/numerics/graph.h"
#include "nmt/numerics/parameter.h"
#include "nmt/numerics/rng.h"
#include "nmt/seq2seq/genotype.h"
#include "nmt/seq2seq/vocab.h"

namespace nmt {

struct ModelConfig {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 128;
  std::size_t layers = 2;
  // Toy default; the full-size systems used 0.2.
  double dropout = 0.1;
  std::size_t max_len = 64;
  // Output projection reuses the target embedding table.
  bool tied_output = false;
  // One embedding table for source and target (requires equal vocabularies).
  bool shared_embeddings = true;

  void validate() const;
  // `key=value` lines in a fixed field order.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  // Transformer-big shaped reference configuration (six layers, dropout 0.2).
  static ModelConfig big_reference(std::size_t vocab);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Per source position: nullopt keeps the one-hot lookup, otherwise the row is
// the expectation of embeddings under the given distribution.
using SoftInputs = std::vector<std::optional<std::vector<double>>>;

struct OpActivation {
  Side side;
  std::size_t layer, node, branch;
  OpKind op;
};

struct ForwardOptions {
  bool train = false;              // dropout on
  num::Rng* rng = nullptr;         // required when train and dropout > 0
  const SoftInputs* soft = nullptr;
  std::size_t target_offset = 0;   // position index of the first decoder row
  std::vector<OpActivation>* trace = nullptr;
};

// Encoder output plus precomputed cross-attention keys/values, used for
// repeated next-token queries against one source.
struct EncodedSource {
  num::Tensor memory;
  std::map<std::string, std::pair<num::Tensor, num::Tensor>> cross_kv;
};

// Encoder-decoder whose layers are wired by a Genotype. A node adds its two
// branch outputs to a residual copy of its first branch's input; a layer sums
// the nodes no other node consumes and applies layer normalisation.
// A supernet holds weights for every candidate op at every branch position and
// runs whichever genotype is active.
class Model {
 public:
  Model(Genotype genotype, ModelConfig config, std::uint64_t seed);
  static Model supernet(ModelConfig config, std::uint64_t seed);

  const Genotype& genotype() const { return genotype_; }
  void set_genotype(const Genotype& g);
  const ModelConfig& config() const { return config_; }
  num::ParamStore& params() { return params_; }
  const num::ParamStore& params() const { return params_; }
  bool is_supernet() const { return supernet_; }
  std::uint64_t seed() const { return seed_; }

  num::NodeId encode(num::Graph& g, std::span<const int> source, const ForwardOptions& opt = {}) const;
  // Hidden states [T x d] for decoder input rows (BOS + shifted target).
  num::NodeId decode(num::Graph& g, num::NodeId memory, std::span<const int> decoder_input,
                     const ForwardOptions& opt = {}, const EncodedSource* cache = nullptr) const;
  num::NodeId output_logits(num::Graph& g, num::NodeId hidden) const;

  // Teacher-forced -sum_t log P(target_t | source, target_<t), plus the EOS
  // term when `append_eos`.
  num::NodeId target_nll(num::Graph& g, num::NodeId memory, std::span<const int> target, bool append_eos,
                         const ForwardOptions& opt = {}) const;
  num::NodeId sequence_nll(num::Graph& g, std::span<const int> source, std::span<const int> target,
                           bool append_eos = true, const ForwardOptions& opt = {}) const;

  EncodedSource encode_source(std::span<const int> source) const;
  // log P(next | source, prefix) over the whole target vocabulary.
  std::vector<double> next_logprobs(const EncodedSource& enc, std::span<const int> prefix) const;

  num::Checkpoint to_checkpoint() const;
  static Model from_checkpoint(const num::Checkpoint& ckpt);

 private:
  Model(ModelConfig config, std::uint64_t seed, bool supernet, Genotype genotype);
  void create_params();
  void add_op_params(const std::string& prefix, OpKind op);
  num::NodeId embed(num::Graph& g, const std::string& table, std::span<const int> ids, std::size_t offset,
                    const SoftInputs* soft, const ForwardOptions& opt) const;
  num::NodeId layer(num::Graph& g, Side side, std::size_t index, num::NodeId x, num::NodeId memory,
                    const ForwardOptions& opt, const EncodedSource* cache) const;
  num::NodeId branch(num::Graph& g, Side side, const std::string& slot, OpKind op, num::NodeId x,
                     num::NodeId memory, const EncodedSource* cache) const;
  const std::string& src_table() const;
  const std::string& tgt_table() const;

  ModelConfig config_;
  std::uint64_t seed_;
  bool supernet_;
  Genotype genotype_;
  num::ParamStore params_;
};

// Name of the parameter prefix for one branch slot, e.g. "dec.1.n2.b0".
std::string slot_name(Side side, std::size_t layer, std::size_t node, std::size_t branch);

// Strips trailing PAD ids.
std::span<const int> trim_padding(std::span<const int> ids);

// Sinusoidal position encodings for rows offset..offset+rows-1.
num::Tensor positional_encoding(std::size_t rows, std::size_t d, std::size_t offset = 0);

std::vector<double> logprobs(const Model& model, std::span<const int> source, std::span<const int> prefix);
// Sum of per-token log-probabilities of `target` (+ EOS). With `reversed`,
// the target order is flipped first, for models trained right-to-left.
double score_sequence(const Model& model, std::span<const int> source, std::span<const int> target,
                      bool reversed = false, bool append_eos = true);

}  // namespace nmt
