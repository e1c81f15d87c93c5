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

#include "nmt/sca/sca.h"

#include <algorithm>
#include <cmath>

#include "nmt/numerics/ops.h"

namespace nmt::sca {

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

std::string layer_prefix(std::size_t l) { return "lm." + std::to_string(l); }

SoftWord softmax_with_temperature(std::span<const double> logits, double temperature) {
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& v : scaled) v /= temperature;
  std::vector<double> lp = num::log_softmax(scaled);
  for (double& v : lp) v = std::exp(v);
  return lp;
}

}  // namespace

void LmConfig::validate() const {
  if (vocab <= static_cast<std::size_t>(special::kCount)) throw Error("lm config: vocabulary too small");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) throw Error("lm config: d_model must be a multiple of n_heads");
  if (layers == 0 || d_ffn == 0 || max_len < 2) throw Error("lm config: bad shape");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("lm config: dropout must be in [0, 1)");
}

CausalLM::CausalLM(LmConfig config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  const std::size_t d = config_.d_model, f = config_.d_ffn, V = config_.vocab;
  auto normal = [&](const std::string& name, std::size_t r, std::size_t c, double sd) {
    num::Rng rng(seed_, fnv1a(name));
    Tensor t = Tensor::matrix(r, c);
    for (double& v : t.values()) v = rng.normal() * sd;
    params_.add(name, std::move(t));
  };
  auto fill = [&](const std::string& name, std::size_t n, double v) {
    params_.add(name, Tensor::vector(std::vector<double>(n, v)));
  };
  {
    num::Rng rng(seed_, fnv1a("lm.embed"));
    Tensor t = Tensor::matrix(V, d);
    for (double& v : t.values()) v = rng.uniform(-0.08, 0.08);
    params_.add("lm.embed", std::move(t));
  }
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = layer_prefix(l);
    for (const char* w : {".wq", ".wk", ".wv", ".wo"}) normal(p + w, d, d, sd);
    fill(p + ".ln1.gain", d, 1.0);
    fill(p + ".ln1.bias", d, 0.0);
    normal(p + ".w1", d, f, sd);
    fill(p + ".b1", f, 0.0);
    normal(p + ".w2", f, d, 1.0 / std::sqrt(static_cast<double>(f)));
    fill(p + ".b2", d, 0.0);
    fill(p + ".ln2.gain", d, 1.0);
    fill(p + ".ln2.bias", d, 0.0);
  }
  normal("lm.out.w", d, V, sd);
  fill("lm.out.b", V, 0.0);
}

NodeId CausalLM::logits(Graph& g, std::span<const int> ids, const ForwardOptions& opt) const {
  std::vector<int> input{special::kBos};
  if (!ids.empty()) input.insert(input.end(), ids.begin(), ids.end() - 1);
  if (input.size() > config_.max_len) throw Error("lm input of length " + std::to_string(ids.size()) + " exceeds max_len");
  for (int id : input) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab) throw Error("lm id outside vocabulary");
  }
  const std::size_t d = config_.d_model;
  auto P = [&](const std::string& n) { return g.parameter(params_.at(n)); };
  const bool drop = opt.train && config_.dropout > 0.0;
  NodeId x = num::gather_rows(g, P("lm.embed"), input);
  x = num::scale(g, x, std::sqrt(static_cast<double>(d)));
  x = num::add(g, x, g.constant(positional_encoding(input.size(), d)));
  if (drop) x = num::dropout(g, x, config_.dropout, *opt.rng);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = layer_prefix(l);
    NodeId a = num::attention(g, num::matmul(g, x, P(p + ".wq")), num::matmul(g, x, P(p + ".wk")),
                              num::matmul(g, x, P(p + ".wv")), config_.n_heads, true);
    a = num::matmul(g, a, P(p + ".wo"));
    if (drop) a = num::dropout(g, a, config_.dropout, *opt.rng);
    x = num::layer_norm(g, num::add(g, x, a), P(p + ".ln1.gain"), P(p + ".ln1.bias"));
    NodeId h = num::linear(g, num::relu(g, num::linear(g, x, P(p + ".w1"), P(p + ".b1"))), P(p + ".w2"), P(p + ".b2"));
    if (drop) h = num::dropout(g, h, config_.dropout, *opt.rng);
    x = num::layer_norm(g, num::add(g, x, h), P(p + ".ln2.gain"), P(p + ".ln2.bias"));
  }
  return num::linear(g, x, P("lm.out.w"), P("lm.out.b"));
}

NodeId CausalLM::nll(Graph& g, std::span<const int> sentence, const ForwardOptions& opt) const {
  std::span<const int> s = trim_padding(sentence);
  std::vector<int> gold(s.begin(), s.end());
  gold.push_back(special::kEos);
  return num::nll_sum(g, logits(g, gold, opt), gold);
}

SoftWord CausalLM::distribution(std::span<const int> prefix, double temperature) const {
  std::vector<int> ids(prefix.begin(), prefix.end());
  ids.push_back(special::kPad);  // placeholder for the queried position
  Graph g(false);
  const Tensor& lg = g.value(logits(g, ids));
  return softmax_with_temperature(lg.row(ids.size() - 1), temperature);
}

std::vector<SoftWord> CausalLM::position_distributions(std::span<const int> sentence, double temperature) const {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  std::vector<SoftWord> out;
  if (sentence.empty()) return out;
  Graph g(false);
  const Tensor& lg = g.value(logits(g, sentence));
  for (std::size_t t = 0; t < sentence.size(); ++t) out.push_back(softmax_with_temperature(lg.row(t), temperature));
  return out;
}

num::Checkpoint CausalLM::to_checkpoint() const {
  num::Checkpoint ck = num::params_to_checkpoint(params_);
  ck.metadata["role"] = "lm";
  ck.metadata["seed"] = std::to_string(seed_);
  ck.metadata["lm.vocab"] = std::to_string(config_.vocab);
  ck.metadata["lm.d_model"] = std::to_string(config_.d_model);
  ck.metadata["lm.n_heads"] = std::to_string(config_.n_heads);
  ck.metadata["lm.d_ffn"] = std::to_string(config_.d_ffn);
  ck.metadata["lm.layers"] = std::to_string(config_.layers);
  ck.metadata["lm.max_len"] = std::to_string(config_.max_len);
  return ck;
}

CausalLM CausalLM::from_checkpoint(const num::Checkpoint& ck) {
  if (ck.meta("role") != "lm") throw Error("checkpoint is not a language model");
  LmConfig c;
  c.vocab = std::stoull(ck.meta("lm.vocab"));
  c.d_model = std::stoull(ck.meta("lm.d_model"));
  c.n_heads = std::stoull(ck.meta("lm.n_heads"));
  c.d_ffn = std::stoull(ck.meta("lm.d_ffn"));
  c.layers = std::stoull(ck.meta("lm.layers"));
  c.max_len = std::stoull(ck.meta("lm.max_len"));
  CausalLM lm(c, std::stoull(ck.meta("seed")));
  num::load_params(lm.params_, ck);
  return lm;
}

CausalLM train_lm(const std::vector<TokenSequence>& corpus, const LmConfig& config, const LmTrainConfig& train,
                  std::uint64_t seed) {
  if (corpus.empty()) throw Error("language model needs a non-empty corpus");
  CausalLM lm(config, seed);
  num::Adam adam(train.adam);
  num::Rng rng(seed, 0x11);
  std::vector<TokenSequence> data = corpus;
  for (std::size_t e = 0; e < train.epochs; ++e) {
    rng.shuffle(data);
    for (std::size_t i = 0; i < data.size(); i += train.batch_size) {
      const std::size_t n = std::min(train.batch_size, data.size() - i);
      Graph g;
      ForwardOptions opt{.train = true, .rng = &rng};
      NodeId total{};
      for (std::size_t j = i; j < i + n; ++j) {
        NodeId l = lm.nll(g, data[j], opt);
        total = total.valid() ? num::add(g, total, l) : l;
      }
      NodeId loss = num::scale(g, total, 1.0 / static_cast<double>(n));
      adam.step(lm.params(), num::backward(g, loss));
    }
  }
  return lm;
}

double lm_perplexity(const CausalLM& lm, const std::vector<TokenSequence>& corpus) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& s : corpus) {
    Graph g(false);
    nll += g.value(lm.nll(g, s)).item();
    tokens += trim_padding(s).size() + 1;
  }
  return tokens == 0 ? 1.0 : std::exp(nll / static_cast<double>(tokens));
}

std::vector<double> soft_embedding(std::span<const double> dist, const Tensor& E) {
  if (dist.size() != E.rows()) {
    throw Error("distribution of size " + std::to_string(dist.size()) + " does not match " +
                std::to_string(E.rows()) + " embedding rows");
  }
  std::vector<double> out(E.cols(), 0.0);
  for (std::size_t j = 0; j < dist.size(); ++j) {
    for (std::size_t c = 0; c < E.cols(); ++c) out[c] += dist[j] * E.at(j, c);
  }
  return out;
}

SoftInputs augment_source(const CausalLM& lm, std::span<const int> source, const AugmentConfig& cfg, num::Rng& rng) {
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw Error("gamma must be in [0, 1]");
  std::span<const int> src = trim_padding(source);
  SoftInputs soft(src.size());
  std::vector<std::size_t> chosen;
  for (std::size_t t = 0; t < src.size(); ++t) {
    if (rng.bernoulli(cfg.gamma)) chosen.push_back(t);
  }
  if (chosen.empty()) return soft;
  const std::vector<SoftWord> dists = lm.position_distributions(src, cfg.temperature);
  for (std::size_t t : chosen) soft[t] = dists[t];
  return soft;
}

double train_step(Model& model, num::Adam& adam, std::span<const SentencePair> batch, const CausalLM& lm,
                  const AugmentConfig& cfg, num::Rng& rng, num::Rng* aug) {
  if (batch.empty()) throw Error("empty batch");
  if (lm.config().vocab != model.config().src_vocab) throw Error("language model and source vocabularies differ");
  Graph g;
  NodeId total{};
  std::vector<SoftInputs> soft(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    soft[i] = augment_source(lm, batch[i].src, cfg, aug ? *aug : rng);
    ForwardOptions opt{.train = true, .rng = &rng, .soft = &soft[i]};
    NodeId l = model.sequence_nll(g, batch[i].src, batch[i].tgt, true, opt);
    total = total.valid() ? num::add(g, total, l) : l;
  }
  NodeId loss = num::scale(g, total, 1.0 / static_cast<double>(batch.size()));
  const double value = g.value(loss).item();
  adam.step(model.params(), num::backward(g, loss));
  return value;
}

double train_epoch(Model& model, num::Adam& adam, std::vector<SentencePair> data, std::size_t batch_size,
                   const CausalLM& lm, const AugmentConfig& cfg, num::Rng& rng, num::Rng* aug) {
  if (data.empty() || batch_size == 0) throw Error("SCA epoch needs data and a positive batch size");
  rng.shuffle(data);
  double sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t i = 0; i < data.size(); i += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - i);
    sum += train_step(model, adam, std::span<const SentencePair>(data).subspan(i, n), lm, cfg, rng, aug);
    ++batches;
  }
  return sum / static_cast<double>(batches);
}

}  // namespace nmt::sca
