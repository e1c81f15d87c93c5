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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmt/error.h"
#include "nmt/numerics/rng.h"

namespace nmt {

// Candidate branch operators. Every op maps [T x d] to [T x d].
// This six-op set stands in for the full operator list of the original
// search space, which is not reproduced here.
enum class OpKind { identity, self_attention, cross_attention, conv3, ffn, zero };

inline constexpr std::array<OpKind, 6> kAllOps = {OpKind::identity, OpKind::self_attention, OpKind::cross_attention,
                                                 OpKind::conv3,    OpKind::ffn,            OpKind::zero};

std::string_view op_name(OpKind op);
std::optional<OpKind> parse_op(std::string_view name);
bool op_allowed(OpKind op, bool decoder);

enum class Side { encoder, decoder };
inline constexpr std::size_t kEncoderNodes = 2;
inline constexpr std::size_t kDecoderNodes = 3;
inline std::size_t nodes_per_layer(Side s) { return s == Side::encoder ? kEncoderNodes : kDecoderNodes; }
std::string_view side_name(Side s);

// input 0 is the layer input; input j >= 1 is the output of node j-1.
struct BranchGene {
  int input = 0;
  OpKind op = OpKind::zero;
  friend bool operator==(const BranchGene&, const BranchGene&) = default;
};

struct NodeGene {
  std::array<BranchGene, 2> branches;
  friend bool operator==(const NodeGene&, const NodeGene&) = default;
};

struct LayerGene {
  std::vector<NodeGene> nodes;
  friend bool operator==(const LayerGene&, const LayerGene&) = default;
};

struct Genotype {
  std::vector<LayerGene> encoder;
  std::vector<LayerGene> decoder;

  std::size_t layers() const { return encoder.size(); }
  const std::vector<LayerGene>& side(Side s) const { return s == Side::encoder ? encoder : decoder; }
  friend bool operator==(const Genotype&, const Genotype&) = default;
};

class GenotypeError : public Error {
 public:
  using Error::Error;
};

// Throws GenotypeError naming the offending layer/node/branch.
void validate(const Genotype& g);
bool is_valid(const Genotype& g);

// Self-attention then feed-forward per encoder layer; self-attention,
// cross-attention, feed-forward per decoder layer. Each node's second branch
// is `zero` so the node reduces to residual + main op.
Genotype transformer_genotype(std::size_t layers);

// Uniformly random valid genotype.
Genotype random_genotype(std::size_t layers, num::Rng& rng);

// Canonical single-line text form, e.g.
//   E:0/self_attention,0/zero|1/ffn,1/zero;D:...
std::string to_text(const Genotype& g);
Genotype genotype_from_text(std::string_view text);

}  // namespace nmt
