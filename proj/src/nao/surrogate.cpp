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

#include "nmt/nao/surrogate.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "nmt/numerics/ops.h"

namespace nmt::nao {

using num::Graph;
using num::NodeId;
using num::Tensor;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

constexpr int kStart = kArchVocab;
constexpr double kMasked = -1e9;

}  // namespace

void SurrogateConfig::validate() const {
  if (layers < 1) throw Error("surrogate: layers must be >= 1");
  if (d_arch < 1) throw Error("surrogate: d_arch must be >= 1");
  if (recon_weight < 0) throw Error("surrogate: recon_weight must be >= 0");
}

Surrogate::Surrogate(SurrogateConfig cfg, std::uint64_t seed) : cfg_(cfg), slots_(arch_slots(cfg.layers)) {
  cfg_.validate();
  for (const auto& s : slots_) legal_.push_back(allowed_tokens(s));
  const std::size_t d = cfg_.d_arch, h = cfg_.d_hidden, L = slots_.size();
  auto add = [&](const std::string& name, std::size_t r, std::size_t c, double sd) {
    num::Rng rng(seed, fnv1a(name));
    Tensor t = Tensor::matrix(r, c);
    if (sd > 0) {
      for (double& v : t.values()) v = rng.normal() * sd;
    }
    params_.add(name, std::move(t));
  };
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  add("nao.tok", kArchVocab + 1, d, 0.5);
  add("nao.pos", L, d, 0.5);
  add("nao.enc.wx", d, d, sd);
  add("nao.enc.wh", d, d, sd);
  add("nao.enc.b", 1, d, 0);
  if (h > 0) {
    add("nao.pred.w1", d, h, sd);
    add("nao.pred.b1", 1, h, 0);
    add("nao.pred.w2", h, 1, 1.0 / std::sqrt(static_cast<double>(h)));
    add("nao.pred.b2", 1, 1, 0);
  } else {
    add("nao.pred.w", d, 1, sd);
    add("nao.pred.b", 1, 1, 0);
  }
  add("nao.dec.wi", d, d, sd);
  add("nao.dec.bi", 1, d, 0);
  add("nao.dec.wx", d, d, sd);
  add("nao.dec.wh", d, d, sd);
  add("nao.dec.we", d, d, sd);
  add("nao.dec.b", 1, d, 0);
  add("nao.dec.wo", d, kArchVocab, sd);
  add("nao.dec.bo", 1, kArchVocab, 0);
  // Direct readout of the embedding at every position.
  for (std::size_t t = 0; t < L; ++t) add("nao.dec.r" + std::to_string(t), d, kArchVocab, sd);
}

NodeId Surrogate::p(Graph& g, const char* name) const { return g.parameter(params_.at(name)); }

void Surrogate::check_arch(const ArchSequence& arch) const {
  if (arch.size() != slots_.size()) {
    throw Error("architecture sequence has " + std::to_string(arch.size()) + " tokens, surrogate expects " +
                std::to_string(slots_.size()));
  }
  for (std::size_t i = 0; i < arch.size(); ++i) {
    if (std::find(legal_[i].begin(), legal_[i].end(), arch[i]) == legal_[i].end()) {
      throw Error("architecture token " + std::to_string(arch[i]) + " is illegal at position " + std::to_string(i));
    }
  }
}

NodeId Surrogate::encode_graph(Graph& g, const std::vector<ArchSequence>& archs) const {
  if (archs.empty()) throw Error("encode_graph needs at least one architecture");
  for (const auto& a : archs) check_arch(a);
  const NodeId tok = p(g, "nao.tok"), pos = p(g, "nao.pos");
  const NodeId wx = p(g, "nao.enc.wx"), wh = p(g, "nao.enc.wh"), b = p(g, "nao.enc.b");
  NodeId h, acc;
  std::vector<int> ids(archs.size());
  for (std::size_t t = 0; t < slots_.size(); ++t) {
    for (std::size_t r = 0; r < archs.size(); ++r) ids[r] = archs[r][t];
    const NodeId x = num::add_bias(g, num::gather_rows(g, tok, ids), num::slice_rows(g, pos, t, 1));
    NodeId pre = num::matmul(g, x, wx);
    if (h.valid()) pre = num::add(g, pre, num::matmul(g, h, wh));
    h = num::tanh(g, num::add_bias(g, pre, b));
    acc = acc.valid() ? num::add(g, acc, h) : h;
  }
  return num::scale(g, acc, 1.0 / static_cast<double>(slots_.size()));
}

NodeId Surrogate::predict_graph(Graph& g, NodeId e) const {
  if (cfg_.d_hidden == 0) return num::linear(g, e, p(g, "nao.pred.w"), p(g, "nao.pred.b"));
  const NodeId hid = num::tanh(g, num::linear(g, e, p(g, "nao.pred.w1"), p(g, "nao.pred.b1")));
  return num::linear(g, hid, p(g, "nao.pred.w2"), p(g, "nao.pred.b2"));
}

NodeId Surrogate::recon_graph(Graph& g, NodeId e, const std::vector<ArchSequence>& archs) const {
  const std::size_t B = archs.size();
  const NodeId tok = p(g, "nao.tok"), pos = p(g, "nao.pos");
  const NodeId wx = p(g, "nao.dec.wx"), wh = p(g, "nao.dec.wh"), b = p(g, "nao.dec.b");
  const NodeId wo = p(g, "nao.dec.wo"), bo = p(g, "nao.dec.bo");
  NodeId s = num::tanh(g, num::linear(g, e, p(g, "nao.dec.wi"), p(g, "nao.dec.bi")));
  const NodeId ec = num::matmul(g, e, p(g, "nao.dec.we"));
  NodeId total;
  std::vector<int> prev(B, kStart), target(B);
  for (std::size_t t = 0; t < slots_.size(); ++t) {
    const NodeId x = num::add_bias(g, num::gather_rows(g, tok, prev), num::slice_rows(g, pos, t, 1));
    s = num::tanh(g, num::add_bias(g, num::add(g, num::add(g, num::matmul(g, x, wx), num::matmul(g, s, wh)), ec), b));
    Tensor mask = Tensor::matrix(B, kArchVocab, kMasked);
    for (std::size_t r = 0; r < B; ++r) {
      for (int v : legal_[t]) mask.at(r, static_cast<std::size_t>(v)) = 0.0;
    }
    const NodeId readout = num::matmul(g, e, g.parameter(params_.at("nao.dec.r" + std::to_string(t))));
    const NodeId logits =
        num::add(g, num::add(g, num::linear(g, s, wo, bo), readout), g.constant(std::move(mask)));
    for (std::size_t r = 0; r < B; ++r) target[r] = archs[r][t];
    const NodeId nll = num::nll_sum(g, logits, target);
    total = total.valid() ? num::add(g, total, nll) : nll;
    prev = target;
  }
  return num::scale(g, total, 1.0 / static_cast<double>(B * slots_.size()));
}

NodeId Surrogate::loss_graph(Graph& g, const std::vector<ArchExample>& batch, SurrogateLoss* parts) const {
  std::vector<ArchSequence> archs;
  Tensor y = Tensor::matrix(batch.size(), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    archs.push_back(batch[i].arch);
    y[i] = batch[i].y;
  }
  const NodeId e = encode_graph(g, archs);
  const NodeId diff = num::sub(g, predict_graph(g, e), g.constant(std::move(y)));
  const NodeId mse = num::mean(g, num::mul(g, diff, diff));
  const NodeId recon = recon_graph(g, e, archs);
  const NodeId total = num::add(g, mse, num::scale(g, recon, cfg_.recon_weight));
  if (parts) *parts = {g.value(total).item(), g.value(mse).item(), g.value(recon).item()};
  return total;
}

ArchEmbedding Surrogate::encode(const ArchSequence& arch) const {
  Graph g(false);
  const auto& v = g.value(encode_graph(g, {arch}));
  return {v.values().begin(), v.values().end()};
}

double Surrogate::predict(const ArchEmbedding& e) const {
  Graph g(false);
  return g.value(predict_graph(g, g.constant(Tensor({1, e.size()}, e)))).item();
}

ArchEmbedding Surrogate::predict_grad(const ArchEmbedding& e) const {
  Graph g;
  const NodeId v = g.variable(Tensor({1, e.size()}, e));
  num::backward(g, num::sum(g, predict_graph(g, v)));
  const Tensor* grad = g.grad(v);
  if (!grad) return ArchEmbedding(e.size(), 0.0);
  return {grad->values().begin(), grad->values().end()};
}

ArchSequence Surrogate::decode(const ArchEmbedding& e) const {
  if (e.size() != cfg_.d_arch) throw Error("embedding has the wrong dimension");
  const auto& P = [&](const char* n) -> const Tensor& { return params_.at(n).value; };
  const std::size_t d = cfg_.d_arch;
  auto affine = [&](const std::vector<double>& x, const Tensor& w) {
    std::vector<double> out(w.cols(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) out[j] += x[i] * w.at(i, j);
    }
    return out;
  };
  std::vector<double> s = affine(e, P("nao.dec.wi"));
  for (std::size_t j = 0; j < d; ++j) s[j] = std::tanh(s[j] + P("nao.dec.bi")[j]);
  const std::vector<double> ec = affine(e, P("nao.dec.we"));
  ArchSequence out;
  int prev = kStart;
  for (std::size_t t = 0; t < slots_.size(); ++t) {
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = P("nao.tok").at(static_cast<std::size_t>(prev), j) + P("nao.pos").at(t, j);
    const auto a = affine(x, P("nao.dec.wx")), b = affine(s, P("nao.dec.wh"));
    for (std::size_t j = 0; j < d; ++j) s[j] = std::tanh(a[j] + b[j] + ec[j] + P("nao.dec.b")[j]);
    auto logits = affine(s, P("nao.dec.wo"));
    const auto direct = affine(e, params_.at("nao.dec.r" + std::to_string(t)).value);
    for (std::size_t v = 0; v < logits.size(); ++v) logits[v] += direct[v];
    int best = legal_[t].front();
    double best_v = -INFINITY;
    for (int v : legal_[t]) {
      const double lv = logits[static_cast<std::size_t>(v)] + P("nao.dec.bo")[static_cast<std::size_t>(v)];
      if (lv > best_v) best_v = lv, best = v;
    }
    out.push_back(best);
    prev = best;
  }
  return out;
}

num::Checkpoint Surrogate::to_checkpoint() const {
  num::Checkpoint c = num::params_to_checkpoint(params_);
  c.metadata["role"] = "nao-surrogate";
  c.metadata["layers"] = std::to_string(cfg_.layers);
  c.metadata["d_arch"] = std::to_string(cfg_.d_arch);
  c.metadata["d_hidden"] = std::to_string(cfg_.d_hidden);
  c.metadata["recon_weight"] = fmt::format("{}", cfg_.recon_weight);
  return c;
}

Surrogate Surrogate::from_checkpoint(const num::Checkpoint& ckpt) {
  if (ckpt.meta("role") != "nao-surrogate") throw Error("checkpoint is not a surrogate (role " + ckpt.meta("role") + ")");
  SurrogateConfig cfg;
  cfg.layers = std::stoul(ckpt.meta("layers"));
  cfg.d_arch = std::stoul(ckpt.meta("d_arch"));
  cfg.d_hidden = std::stoul(ckpt.meta("d_hidden"));
  cfg.recon_weight = std::stod(ckpt.meta("recon_weight"));
  Surrogate s(cfg, 0);
  num::load_params(s.params_, ckpt);
  return s;
}

ArchEmbedding ascend(const Surrogate& s, const ArchEmbedding& e, double eta) {
  if (eta < 0) throw Error("ascend: eta must be >= 0");
  if (eta == 0) return e;
  const auto grad = s.predict_grad(e);
  ArchEmbedding out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = e[i] + eta * grad[i];
  return out;
}

SurrogateLoss fit_surrogate(Surrogate& s, const std::vector<ArchExample>& data, const SurrogateTrainConfig& cfg,
                            num::Rng& rng) {
  if (data.empty()) throw Error("surrogate needs training data");
  if (cfg.batch_size == 0) throw Error("surrogate batch size must be positive");
  num::Adam adam(cfg.adam);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t ep = 0; ep < cfg.epochs; ++ep) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<ArchExample> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) batch.push_back(data[order[i]]);
      Graph g;
      const NodeId loss = s.loss_graph(g, batch);
      adam.step(s.params(), num::backward(g, loss));
    }
  }
  Graph g(false);
  SurrogateLoss out{};
  s.loss_graph(g, data, &out);
  return out;
}

double reconstruction_accuracy(const Surrogate& s, const std::vector<ArchSequence>& archs) {
  if (archs.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& a : archs) ok += s.decode(s.encode(a)) == a;
  return static_cast<double>(ok) / static_cast<double>(archs.size());
}

}  // namespace nmt::nao
