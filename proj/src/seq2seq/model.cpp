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

#include "nmt/seq2seq/model.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nmt/numerics/ops.h"

namespace nmt {

using num::Graph;
using num::NodeId;
using num::Tensor;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::string kEmbed = "embed";
const std::string kSrcEmbed = "src_embed";
const std::string kTgtEmbed = "tgt_embed";

std::string side_prefix(Side s) { return s == Side::encoder ? "enc" : "dec"; }

}  // namespace

std::string slot_name(Side side, std::size_t layer, std::size_t node, std::size_t branch) {
  return side_prefix(side) + "." + std::to_string(layer) + ".n" + std::to_string(node) + ".b" + std::to_string(branch);
}

std::span<const int> trim_padding(std::span<const int> ids) {
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == special::kPad) --n;
  return ids.first(n);
}

Tensor positional_encoding(std::size_t rows, std::size_t d, std::size_t offset) {
  Tensor pe = Tensor::matrix(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double pos = static_cast<double>(r + offset);
    for (std::size_t i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pe.at(r, i) = std::sin(pos * freq);
      if (i + 1 < d) pe.at(r, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

// ---------------------------------------------------------------- config

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error("model config: " + m); };
  if (src_vocab <= static_cast<std::size_t>(special::kCount) || tgt_vocab <= static_cast<std::size_t>(special::kCount)) {
    fail("vocabularies must hold more than the special tokens");
  }
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) fail("d_model must be a positive multiple of n_heads");
  if (d_ffn == 0) fail("d_ffn must be positive");
  if (layers == 0) fail("layers must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
  if (max_len < 2) fail("max_len must be >= 2");
  if (shared_embeddings && src_vocab != tgt_vocab) fail("shared embeddings need equal vocabulary sizes");
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "src_vocab=" << src_vocab << "\n"
     << "tgt_vocab=" << tgt_vocab << "\n"
     << "d_model=" << d_model << "\n"
     << "n_heads=" << n_heads << "\n"
     << "d_ffn=" << d_ffn << "\n"
     << "layers=" << layers << "\n"
     << "dropout=" << dropout << "\n"
     << "max_len=" << max_len << "\n"
     << "tied_output=" << (tied_output ? 1 : 0) << "\n"
     << "shared_embeddings=" << (shared_embeddings ? 1 : 0) << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("model config: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto as_size = [&] { return static_cast<std::size_t>(std::stoull(val)); };
    if (key == "src_vocab") c.src_vocab = as_size();
    else if (key == "tgt_vocab") c.tgt_vocab = as_size();
    else if (key == "d_model") c.d_model = as_size();
    else if (key == "n_heads") c.n_heads = as_size();
    else if (key == "d_ffn") c.d_ffn = as_size();
    else if (key == "layers") c.layers = as_size();
    else if (key == "dropout") c.dropout = std::stod(val);
    else if (key == "max_len") c.max_len = as_size();
    else if (key == "tied_output") c.tied_output = val == "1";
    else if (key == "shared_embeddings") c.shared_embeddings = val == "1";
    else throw Error("model config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::big_reference(std::size_t vocab) {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = vocab;
  c.d_model = 1024;
  c.n_heads = 16;
  c.d_ffn = 4096;
  c.layers = 6;
  c.dropout = 0.2;
  c.max_len = 256;
  return c;
}

// ---------------------------------------------------------------- model

Model::Model(ModelConfig config, std::uint64_t seed, bool supernet, Genotype genotype)
    : config_(config), seed_(seed), supernet_(supernet), genotype_(std::move(genotype)) {
  config_.validate();
  validate(genotype_);
  if (genotype_.layers() != config_.layers) {
    throw GenotypeError("genotype has " + std::to_string(genotype_.layers()) + " layers, config expects " +
                        std::to_string(config_.layers));
  }
  create_params();
}

Model::Model(Genotype genotype, ModelConfig config, std::uint64_t seed)
    : Model(config, seed, false, std::move(genotype)) {}

Model Model::supernet(ModelConfig config, std::uint64_t seed) {
  return Model(config, seed, true, transformer_genotype(config.layers));
}

void Model::set_genotype(const Genotype& g) {
  validate(g);
  if (g.layers() != config_.layers) throw GenotypeError("genotype depth does not match the model");
  if (!supernet_ && !(g == genotype_)) {
    // A fixed model may only switch to a genotype whose ops it already owns.
    for (Side side : {Side::encoder, Side::decoder}) {
      for (std::size_t l = 0; l < g.layers(); ++l) {
        for (std::size_t n = 0; n < nodes_per_layer(side); ++n) {
          for (std::size_t b = 0; b < 2; ++b) {
            const OpKind op = g.side(side)[l].nodes[n].branches[b].op;
            if (op == OpKind::identity || op == OpKind::zero) continue;
            const auto name = slot_name(side, l, n, b) + "." + std::string(op_name(op));
            bool found = false;
            for (std::size_t i = 0; i < params_.size() && !found; ++i) {
              found = params_[i].name.rfind(name, 0) == 0;
            }
            if (!found) throw GenotypeError("model has no weights for " + name);
          }
        }
      }
    }
  }
  genotype_ = g;
}

void Model::create_params() {
  const std::size_t d = config_.d_model;
  auto uniform_init = [&](const std::string& name, std::size_t r, std::size_t c) {
    num::Rng rng(seed_, fnv1a(name));
    Tensor t = Tensor::matrix(r, c);
    for (double& v : t.values()) v = rng.uniform(-0.08, 0.08);
    params_.add(name, std::move(t));
  };
  auto normal_init = [&](const std::string& name, std::size_t r, std::size_t c, double fan_in) {
    num::Rng rng(seed_, fnv1a(name));
    Tensor t = Tensor::matrix(r, c);
    const double sd = 1.0 / std::sqrt(fan_in);
    for (double& v : t.values()) v = rng.normal() * sd;
    params_.add(name, std::move(t));
  };

  if (config_.shared_embeddings) {
    uniform_init(kEmbed, config_.src_vocab, d);
  } else {
    uniform_init(kSrcEmbed, config_.src_vocab, d);
    uniform_init(kTgtEmbed, config_.tgt_vocab, d);
  }
  if (!config_.tied_output) normal_init("out.w", d, config_.tgt_vocab, static_cast<double>(d));
  params_.add("out.b", Tensor::vector(std::vector<double>(config_.tgt_vocab, 0.0)));

  for (Side side : {Side::encoder, Side::decoder}) {
    const bool dec = side == Side::decoder;
    for (std::size_t l = 0; l < config_.layers; ++l) {
      for (std::size_t n = 0; n < nodes_per_layer(side); ++n) {
        for (std::size_t b = 0; b < 2; ++b) {
          const std::string slot = slot_name(side, l, n, b);
          if (supernet_) {
            for (OpKind op : kAllOps) {
              if (op_allowed(op, dec)) add_op_params(slot, op);
            }
          } else {
            add_op_params(slot, genotype_.side(side)[l].nodes[n].branches[b].op);
          }
        }
      }
      const std::string ln = side_prefix(side) + "." + std::to_string(l) + ".ln";
      params_.add(ln + ".gain", Tensor::vector(std::vector<double>(d, 1.0)));
      params_.add(ln + ".bias", Tensor::vector(std::vector<double>(d, 0.0)));
    }
  }
}

void Model::add_op_params(const std::string& slot, OpKind op) {
  const std::size_t d = config_.d_model, f = config_.d_ffn;
  const std::string p = slot + "." + std::string(op_name(op));
  auto normal_init = [&](const std::string& name, std::size_t r, std::size_t c, double fan_in) {
    num::Rng rng(seed_, fnv1a(name));
    Tensor t = Tensor::matrix(r, c);
    const double sd = 1.0 / std::sqrt(fan_in);
    for (double& v : t.values()) v = rng.normal() * sd;
    params_.add(name, std::move(t));
  };
  auto zeros = [&](const std::string& name, std::size_t n) { params_.add(name, Tensor::vector(std::vector<double>(n, 0.0))); };
  switch (op) {
    case OpKind::self_attention:
    case OpKind::cross_attention:
      for (const char* w : {".wq", ".wk", ".wv", ".wo"}) normal_init(p + w, d, d, static_cast<double>(d));
      break;
    case OpKind::conv3:
      normal_init(p + ".w", 3, d, 3.0);
      zeros(p + ".b", d);
      break;
    case OpKind::ffn:
      normal_init(p + ".w1", d, f, static_cast<double>(d));
      zeros(p + ".b1", f);
      normal_init(p + ".w2", f, d, static_cast<double>(f));
      zeros(p + ".b2", d);
      break;
    case OpKind::identity:
    case OpKind::zero:
      break;
  }
}

const std::string& Model::src_table() const { return config_.shared_embeddings ? kEmbed : kSrcEmbed; }
const std::string& Model::tgt_table() const { return config_.shared_embeddings ? kEmbed : kTgtEmbed; }

NodeId Model::embed(Graph& g, const std::string& table, std::span<const int> ids, std::size_t offset,
                    const SoftInputs* soft, const ForwardOptions& opt) const {
  const std::size_t d = config_.d_model;
  if (offset + ids.size() > config_.max_len) {
    throw Error("sequence of " + std::to_string(ids.size()) + " positions (offset " + std::to_string(offset) +
                ") exceeds max_len " + std::to_string(config_.max_len));
  }
  NodeId t = g.parameter(params_.at(table));
  NodeId x = soft ? num::soft_gather_rows(g, t, ids, *soft) : num::gather_rows(g, t, ids);
  x = num::scale(g, x, std::sqrt(static_cast<double>(d)));
  x = num::add(g, x, g.constant(positional_encoding(ids.size(), d, offset)));
  if (opt.train && config_.dropout > 0.0) x = num::dropout(g, x, config_.dropout, *opt.rng);
  return x;
}

NodeId Model::branch(Graph& g, Side side, const std::string& slot, OpKind op, NodeId x, NodeId memory,
                     const EncodedSource* cache) const {
  const bool dec = side == Side::decoder;
  const std::string p = slot + "." + std::string(op_name(op));
  auto P = [&](const char* suffix) { return g.parameter(params_.at(p + suffix)); };
  switch (op) {
    case OpKind::identity:
      return x;
    case OpKind::self_attention: {
      NodeId q = num::matmul(g, x, P(".wq"));
      NodeId k = num::matmul(g, x, P(".wk"));
      NodeId v = num::matmul(g, x, P(".wv"));
      return num::matmul(g, num::attention(g, q, k, v, config_.n_heads, dec), P(".wo"));
    }
    case OpKind::cross_attention: {
      NodeId q = num::matmul(g, x, P(".wq"));
      NodeId k, v;
      const auto* kv = cache ? &cache->cross_kv : nullptr;
      if (auto it = kv ? kv->find(p) : decltype(kv->find(p)){}; kv && it != kv->end()) {
        k = g.constant(it->second.first);
        v = g.constant(it->second.second);
      } else {
        k = num::matmul(g, memory, P(".wk"));
        v = num::matmul(g, memory, P(".wv"));
      }
      return num::matmul(g, num::attention(g, q, k, v, config_.n_heads, false), P(".wo"));
    }
    case OpKind::conv3:
      return num::depthwise_conv3(g, x, P(".w"), P(".b"), dec);
    case OpKind::ffn: {
      NodeId h = num::relu(g, num::linear(g, x, P(".w1"), P(".b1")));
      return num::linear(g, h, P(".w2"), P(".b2"));
    }
    case OpKind::zero:
      break;
  }
  throw Error("zero op has no forward");
}

NodeId Model::layer(Graph& g, Side side, std::size_t index, NodeId x, NodeId memory, const ForwardOptions& opt,
                    const EncodedSource* cache) const {
  const LayerGene& gene = genotype_.side(side)[index];
  std::vector<NodeId> outputs{x};
  std::vector<bool> consumed(gene.nodes.size(), false);
  for (std::size_t n = 0; n < gene.nodes.size(); ++n) {
    const auto& br = gene.nodes[n].branches;
    NodeId out = outputs[static_cast<std::size_t>(br[0].input)];
    for (std::size_t b = 0; b < 2; ++b) {
      const BranchGene& bg = br[b];
      if (bg.input > 0) consumed[static_cast<std::size_t>(bg.input - 1)] = true;
      if (opt.trace) opt.trace->push_back(OpActivation{side, index, n, b, bg.op});
      if (bg.op == OpKind::zero) continue;
      NodeId y = branch(g, side, slot_name(side, index, n, b), bg.op,
                        outputs[static_cast<std::size_t>(bg.input)], memory, cache);
      if (opt.train && config_.dropout > 0.0) y = num::dropout(g, y, config_.dropout, *opt.rng);
      out = num::add(g, out, y);
    }
    outputs.push_back(out);
  }
  NodeId total{};
  for (std::size_t n = 0; n < gene.nodes.size(); ++n) {
    if (consumed[n]) continue;
    total = total.valid() ? num::add(g, total, outputs[n + 1]) : outputs[n + 1];
  }
  const std::string ln = side_prefix(side) + "." + std::to_string(index) + ".ln";
  return num::layer_norm(g, total, g.parameter(params_.at(ln + ".gain")), g.parameter(params_.at(ln + ".bias")));
}

NodeId Model::encode(Graph& g, std::span<const int> source, const ForwardOptions& opt) const {
  std::span<const int> src = trim_padding(source);
  std::vector<int> ids(src.begin(), src.end());
  ids.push_back(special::kEos);
  if (ids.size() > config_.max_len) {
    throw Error("source of length " + std::to_string(src.size()) + " exceeds max_len " +
                std::to_string(config_.max_len));
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.src_vocab) {
      throw Error("source id " + std::to_string(id) + " outside vocabulary");
    }
  }
  SoftInputs soft;
  if (opt.soft) {
    if (opt.soft->size() != src.size()) throw Error("soft inputs must cover every source position");
    soft = *opt.soft;
    soft.emplace_back(std::nullopt);
  }
  NodeId x = embed(g, src_table(), ids, 0, opt.soft ? &soft : nullptr, opt);
  for (std::size_t l = 0; l < config_.layers; ++l) x = layer(g, Side::encoder, l, x, {}, opt, nullptr);
  return x;
}

NodeId Model::decode(Graph& g, NodeId memory, std::span<const int> decoder_input, const ForwardOptions& opt,
                     const EncodedSource* cache) const {
  for (int id : decoder_input) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.tgt_vocab) {
      throw Error("target id " + std::to_string(id) + " outside vocabulary");
    }
  }
  NodeId y = embed(g, tgt_table(), decoder_input, opt.target_offset, nullptr, opt);
  for (std::size_t l = 0; l < config_.layers; ++l) y = layer(g, Side::decoder, l, y, memory, opt, cache);
  return y;
}

NodeId Model::output_logits(Graph& g, NodeId hidden) const {
  NodeId bias = g.parameter(params_.at("out.b"));
  if (config_.tied_output) {
    return num::add_bias(g, num::matmul_bt(g, hidden, g.parameter(params_.at(tgt_table()))), bias);
  }
  return num::linear(g, hidden, g.parameter(params_.at("out.w")), bias);
}

NodeId Model::target_nll(Graph& g, NodeId memory, std::span<const int> target, bool append_eos,
                         const ForwardOptions& opt) const {
  std::span<const int> tgt = trim_padding(target);
  std::vector<int> gold(tgt.begin(), tgt.end());
  if (append_eos) gold.push_back(special::kEos);
  if (gold.empty()) return g.constant(Tensor::scalar(0.0));
  std::vector<int> input{special::kBos};
  input.insert(input.end(), gold.begin(), gold.end() - 1);
  NodeId logits = output_logits(g, decode(g, memory, input, opt));
  return num::nll_sum(g, logits, gold);
}

NodeId Model::sequence_nll(Graph& g, std::span<const int> source, std::span<const int> target, bool append_eos,
                           const ForwardOptions& opt) const {
  return target_nll(g, encode(g, source, opt), target, append_eos, opt);
}

EncodedSource Model::encode_source(std::span<const int> source) const {
  Graph g(false);
  EncodedSource enc;
  NodeId mem = encode(g, source);
  enc.memory = g.value(mem);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    for (std::size_t n = 0; n < kDecoderNodes; ++n) {
      for (std::size_t b = 0; b < 2; ++b) {
        if (genotype_.decoder[l].nodes[n].branches[b].op != OpKind::cross_attention) continue;
        const std::string p = slot_name(Side::decoder, l, n, b) + ".cross_attention";
        NodeId k = num::matmul(g, mem, g.parameter(params_.at(p + ".wk")));
        NodeId v = num::matmul(g, mem, g.parameter(params_.at(p + ".wv")));
        enc.cross_kv.emplace(p, std::make_pair(g.value(k), g.value(v)));
      }
    }
  }
  return enc;
}

std::vector<double> Model::next_logprobs(const EncodedSource& enc, std::span<const int> prefix) const {
  std::span<const int> pre = trim_padding(prefix);
  std::vector<int> input{special::kBos};
  input.insert(input.end(), pre.begin(), pre.end());
  if (input.size() > config_.max_len) {
    throw Error("target prefix of length " + std::to_string(pre.size()) + " exceeds max_len " +
                std::to_string(config_.max_len));
  }
  Graph g(false);
  NodeId mem = g.constant(enc.memory);
  NodeId hidden = decode(g, mem, input, {}, &enc);
  NodeId last = num::slice_rows(g, hidden, input.size() - 1, 1);
  return num::log_softmax(g.value(output_logits(g, last)).values());
}

num::Checkpoint Model::to_checkpoint() const {
  num::Checkpoint ck = num::params_to_checkpoint(params_);
  ck.metadata["role"] = "seq2seq";
  ck.metadata["genotype"] = to_text(genotype_);
  ck.metadata["config"] = config_.to_text();
  ck.metadata["supernet"] = supernet_ ? "1" : "0";
  ck.metadata["seed"] = std::to_string(seed_);
  return ck;
}

Model Model::from_checkpoint(const num::Checkpoint& ck) {
  ModelConfig cfg = ModelConfig::from_text(ck.meta("config"));
  Genotype geno = genotype_from_text(ck.meta("genotype"));
  const std::uint64_t seed = std::stoull(ck.meta("seed"));
  Model m(cfg, seed, ck.meta("supernet") == "1", geno);
  num::load_params(m.params_, ck);
  return m;
}

std::vector<double> logprobs(const Model& model, std::span<const int> source, std::span<const int> prefix) {
  return model.next_logprobs(model.encode_source(source), prefix);
}

double score_sequence(const Model& model, std::span<const int> source, std::span<const int> target, bool reversed,
                      bool append_eos) {
  std::vector<int> tgt(target.begin(), target.end());
  if (reversed) std::reverse(tgt.begin(), tgt.end());
  Graph g(false);
  return -g.value(model.sequence_nll(g, source, tgt, append_eos)).item();
}

}  // namespace nmt
