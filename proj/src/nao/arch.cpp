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

#include "nmt/nao/arch.h"

#include <algorithm>

namespace nmt::nao {

std::vector<ArchSlot> arch_slots(std::size_t layers) {
  std::vector<ArchSlot> out;
  for (Side side : {Side::encoder, Side::decoder}) {
    for (std::size_t l = 0; l < layers; ++l) {
      for (std::size_t n = 0; n < nodes_per_layer(side); ++n) {
        for (std::size_t b = 0; b < 2; ++b) {
          out.push_back({side, l, n, b, false});
          out.push_back({side, l, n, b, true});
        }
      }
    }
  }
  return out;
}

std::size_t arch_length(std::size_t layers) { return layers * (kEncoderNodes + kDecoderNodes) * 4; }

std::vector<int> allowed_tokens(const ArchSlot& slot) {
  std::vector<int> out;
  if (!slot.is_op) {
    for (int i = 0; i <= static_cast<int>(slot.node); ++i) out.push_back(i);
    return out;
  }
  for (OpKind op : kAllOps) {
    if (op_allowed(op, slot.side == Side::decoder)) out.push_back(op_token(op));
  }
  return out;
}

ArchSequence encode_genotype(const Genotype& g) {
  validate(g);
  ArchSequence out;
  out.reserve(arch_length(g.layers()));
  for (Side side : {Side::encoder, Side::decoder}) {
    for (const auto& layer : g.side(side)) {
      for (const auto& node : layer.nodes) {
        for (const auto& br : node.branches) {
          out.push_back(br.input);
          out.push_back(op_token(br.op));
        }
      }
    }
  }
  return out;
}

Genotype decode_genotype(const ArchSequence& seq, std::size_t layers) {
  const auto slots = arch_slots(layers);
  if (seq.size() != slots.size()) {
    throw GenotypeError("architecture sequence has " + std::to_string(seq.size()) + " tokens, expected " +
                        std::to_string(slots.size()));
  }
  Genotype g;
  g.encoder.assign(layers, LayerGene{std::vector<NodeGene>(kEncoderNodes)});
  g.decoder.assign(layers, LayerGene{std::vector<NodeGene>(kDecoderNodes)});
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const ArchSlot& s = slots[i];
    const auto legal = allowed_tokens(s);
    if (std::find(legal.begin(), legal.end(), seq[i]) == legal.end()) {
      throw GenotypeError("architecture token " + std::to_string(seq[i]) + " at position " + std::to_string(i) +
                          " is not legal there");
    }
    BranchGene& br = (s.side == Side::encoder ? g.encoder : g.decoder)[s.layer].nodes[s.node].branches[s.branch];
    if (s.is_op) {
      br.op = kAllOps[static_cast<std::size_t>(seq[i] - kInputTokens)];
    } else {
      br.input = seq[i];
    }
  }
  return g;
}

}  // namespace nmt::nao
