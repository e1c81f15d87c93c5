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

#include "nmt/seq2seq/genotype.h"

#include <sstream>

namespace nmt {

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::identity: return "identity";
    case OpKind::self_attention: return "self_attention";
    case OpKind::cross_attention: return "cross_attention";
    case OpKind::conv3: return "conv3";
    case OpKind::ffn: return "ffn";
    case OpKind::zero: return "zero";
  }
  return "?";
}

std::optional<OpKind> parse_op(std::string_view name) {
  for (OpKind op : kAllOps) {
    if (op_name(op) == name) return op;
  }
  return std::nullopt;
}

bool op_allowed(OpKind op, bool decoder) { return decoder || op != OpKind::cross_attention; }

std::string_view side_name(Side s) { return s == Side::encoder ? "encoder" : "decoder"; }

namespace {

void validate_side(const std::vector<LayerGene>& layers, Side side) {
  const std::size_t want = nodes_per_layer(side);
  const bool dec = side == Side::decoder;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto where = std::string(side_name(side)) + " layer " + std::to_string(l);
    if (layers[l].nodes.size() != want) {
      throw GenotypeError(where + " has " + std::to_string(layers[l].nodes.size()) + " nodes, expected " +
                          std::to_string(want));
    }
    for (std::size_t n = 0; n < want; ++n) {
      for (std::size_t b = 0; b < 2; ++b) {
        const BranchGene& br = layers[l].nodes[n].branches[b];
        const auto at = where + " node " + std::to_string(n) + " branch " + std::to_string(b);
        if (br.input < 0 || static_cast<std::size_t>(br.input) > n) {
          throw GenotypeError(at + " reads input " + std::to_string(br.input) +
                              ", which is not the layer input or an earlier node");
        }
        if (!op_allowed(br.op, dec)) {
          throw GenotypeError(at + " uses " + std::string(op_name(br.op)) + ", which is decoder-only");
        }
      }
    }
  }
}

}  // namespace

void validate(const Genotype& g) {
  if (g.encoder.empty()) throw GenotypeError("genotype has no encoder layers");
  if (g.encoder.size() != g.decoder.size()) {
    throw GenotypeError("genotype has " + std::to_string(g.encoder.size()) + " encoder layers but " +
                        std::to_string(g.decoder.size()) + " decoder layers");
  }
  validate_side(g.encoder, Side::encoder);
  validate_side(g.decoder, Side::decoder);
}

bool is_valid(const Genotype& g) {
  try {
    validate(g);
    return true;
  } catch (const GenotypeError&) {
    return false;
  }
}

Genotype transformer_genotype(std::size_t layers) {
  if (layers < 1) throw GenotypeError("transformer_genotype needs at least one layer");
  Genotype g;
  LayerGene enc;
  enc.nodes = {NodeGene{{BranchGene{0, OpKind::self_attention}, BranchGene{0, OpKind::zero}}},
               NodeGene{{BranchGene{1, OpKind::ffn}, BranchGene{1, OpKind::zero}}}};
  LayerGene dec;
  dec.nodes = {NodeGene{{BranchGene{0, OpKind::self_attention}, BranchGene{0, OpKind::zero}}},
               NodeGene{{BranchGene{1, OpKind::cross_attention}, BranchGene{1, OpKind::zero}}},
               NodeGene{{BranchGene{2, OpKind::ffn}, BranchGene{2, OpKind::zero}}}};
  g.encoder.assign(layers, enc);
  g.decoder.assign(layers, dec);
  return g;
}

Genotype random_genotype(std::size_t layers, num::Rng& rng) {
  Genotype g;
  for (Side side : {Side::encoder, Side::decoder}) {
    auto& out = side == Side::encoder ? g.encoder : g.decoder;
    const bool dec = side == Side::decoder;
    std::vector<OpKind> ops;
    for (OpKind op : kAllOps) {
      if (op_allowed(op, dec)) ops.push_back(op);
    }
    for (std::size_t l = 0; l < layers; ++l) {
      LayerGene layer;
      for (std::size_t n = 0; n < nodes_per_layer(side); ++n) {
        NodeGene node;
        for (auto& br : node.branches) {
          br.input = static_cast<int>(rng.index(n + 1));
          br.op = ops[rng.index(ops.size())];
        }
        layer.nodes.push_back(node);
      }
      out.push_back(layer);
    }
  }
  return g;
}

std::string to_text(const Genotype& g) {
  std::ostringstream os;
  bool first_layer = true;
  for (Side side : {Side::encoder, Side::decoder}) {
    for (const LayerGene& layer : g.side(side)) {
      if (!first_layer) os << ';';
      first_layer = false;
      os << (side == Side::encoder ? "E:" : "D:");
      for (std::size_t n = 0; n < layer.nodes.size(); ++n) {
        if (n) os << '|';
        const auto& b = layer.nodes[n].branches;
        os << b[0].input << '/' << op_name(b[0].op) << ',' << b[1].input << '/' << op_name(b[1].op);
      }
    }
  }
  return os.str();
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

BranchGene parse_branch(std::string_view text) {
  const std::size_t slash = text.find('/');
  if (slash == std::string_view::npos) throw GenotypeError("malformed branch '" + std::string(text) + "'");
  BranchGene b;
  const std::string input(text.substr(0, slash));
  if (input.empty() || input.find_first_not_of("0123456789") != std::string::npos) {
    throw GenotypeError("malformed branch input '" + input + "'");
  }
  b.input = std::stoi(input);
  auto op = parse_op(text.substr(slash + 1));
  if (!op) throw GenotypeError("unknown op '" + std::string(text.substr(slash + 1)) + "'");
  b.op = *op;
  return b;
}

}  // namespace

Genotype genotype_from_text(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  Genotype g;
  for (std::string_view layer_text : split(text, ';')) {
    if (layer_text.size() < 2 || layer_text[1] != ':') {
      throw GenotypeError("malformed layer '" + std::string(layer_text) + "'");
    }
    auto& side = layer_text[0] == 'E' ? g.encoder : layer_text[0] == 'D' ? g.decoder
                                                                            : throw GenotypeError("bad side tag");
    LayerGene layer;
    for (std::string_view node_text : split(layer_text.substr(2), '|')) {
      auto parts = split(node_text, ',');
      if (parts.size() != 2) throw GenotypeError("node needs two branches: '" + std::string(node_text) + "'");
      layer.nodes.push_back(NodeGene{{parse_branch(parts[0]), parse_branch(parts[1])}});
    }
    side.push_back(std::move(layer));
  }
  validate(g);
  return g;
}

}  // namespace nmt
