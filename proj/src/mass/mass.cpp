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

#include "nmt/mass/mass.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "nmt/numerics/ops.h"

namespace nmt::mass {

using num::Graph;
using num::NodeId;

namespace {
constexpr std::size_t kMinLength = 4;
}

MaskSpec sample_mask(std::size_t m, double ratio, num::Rng& rng) {
  if (m < kMinLength) throw Error("cannot mask a sentence of length " + std::to_string(m) + " (need >= 4)");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("mask ratio must be in (0, 1)");
  std::size_t k = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(m))));
  k = std::min(k, m - 2);
  // Valid starts: 2 .. m-k.
  const std::size_t u = 2 + rng.index(m - k - 1);
  return {u, u + k - 1, m};
}

MaskSpec full_mask(std::size_t m) { return {1, m, m}; }

bool is_strict(const MaskSpec& s) { return s.u > 1 && s.u < s.v && s.v < s.m; }

MaskedSentence apply_mask(std::span<const int> x, const MaskSpec& spec, bool strict) {
  if (spec.m != x.size() || spec.u < 1 || spec.u > spec.v || spec.v > spec.m) {
    throw Error("mask [" + std::to_string(spec.u) + ", " + std::to_string(spec.v) + "] does not fit a sentence of length " +
                std::to_string(x.size()));
  }
  if (strict && !is_strict(spec)) throw Error("mask must satisfy 1 < u < v < m");
  MaskedSentence out;
  out.masked.assign(x.begin(), x.end());
  for (std::size_t i = spec.u - 1; i < spec.v; ++i) {
    out.fragment.push_back(x[i]);
    out.masked[i] = special::kMask;
  }
  return out;
}

TokenSequence reconstruct(std::span<const int> masked, std::span<const int> fragment, const MaskSpec& spec) {
  if (masked.size() != spec.m || fragment.size() != spec.k()) throw Error("fragment does not match mask");
  TokenSequence x(masked.begin(), masked.end());
  std::copy(fragment.begin(), fragment.end(), x.begin() + static_cast<std::ptrdiff_t>(spec.u - 1));
  return x;
}

TokenSequence concat_masked(std::span<const int> a, std::span<const int> b) {
  TokenSequence out(a.begin(), a.end());
  out.push_back(special::kSep);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

NodeId fragment_nll(Graph& g, const Model& model, std::span<const int> encoder_input, std::span<const int> fragment,
                    const MaskSpec& spec, const ForwardOptions& opt) {
  ForwardOptions o = opt;
  o.target_offset = spec.u - 1;
  return model.target_nll(g, model.encode(g, encoder_input, opt), fragment, false, o);
}

namespace {

NodeId accumulate(Graph& g, NodeId total, NodeId term) { return total.valid() ? num::add(g, total, term) : term; }

NodeId batch_mean(Graph& g, NodeId total, std::size_t n) {
  return num::scale(g, total, 1.0 / static_cast<double>(n));
}

}  // namespace

NodeId unsup_loss(Graph& g, const Model& model, std::span<const TokenSequence> batch, num::Rng& rng,
                  const MaskConfig& cfg, const ForwardOptions& opt, std::vector<MaskSpec>* masks) {
  NodeId total{};
  std::size_t used = 0, skipped = 0;
  for (const TokenSequence& raw : batch) {
    std::span<const int> x = trim_padding(raw);
    if (x.size() < kMinLength) {
      ++skipped;
      continue;
    }
    const MaskSpec spec = sample_mask(x.size(), cfg.ratio, rng);
    if (masks) masks->push_back(spec);
    const MaskedSentence ms = apply_mask(x, spec);
    total = accumulate(g, total, fragment_nll(g, model, ms.masked, ms.fragment, spec, opt));
    ++used;
  }
  if (skipped > 0) spdlog::debug("mass: skipped {} sentence(s) shorter than {} tokens", skipped, kMinLength);
  if (used == 0) return g.constant(num::Tensor::scalar(0.0));
  return batch_mean(g, total, used);
}

SupervisedTerms sup_terms(Graph& g, const Model& model, std::span<const SentencePair> batch, num::Rng& rng,
                          const MaskConfig& cfg, const ForwardOptions& opt) {
  std::array<NodeId, kSupervisedTerms> sums{};
  std::size_t used = 0, skipped = 0;
  for (const SentencePair& p : batch) {
    std::span<const int> x = trim_padding(p.src), y = trim_padding(p.tgt);
    if (x.size() < kMinLength || y.size() < kMinLength) {
      ++skipped;
      continue;
    }
    const MaskSpec sx = sample_mask(x.size(), cfg.ratio, rng);
    const MaskSpec sy = sample_mask(y.size(), cfg.ratio, rng);
    const MaskedSentence mx = apply_mask(x, sx), my = apply_mask(y, sy);
    const TokenSequence joint = concat_masked(mx.masked, my.masked);

    const NodeId enc_x = model.encode(g, mx.masked, opt);
    const NodeId enc_y = model.encode(g, my.masked, opt);
    const NodeId enc_xy = model.encode(g, joint, opt);
    ForwardOptions ox = opt, oy = opt;
    ox.target_offset = sx.u - 1;
    oy.target_offset = sy.u - 1;

    const std::array<NodeId, kSupervisedTerms> t{
        model.target_nll(g, enc_x, y, true, opt),
        model.target_nll(g, enc_y, x, true, opt),
        model.target_nll(g, enc_xy, mx.fragment, false, ox),
        model.target_nll(g, enc_xy, my.fragment, false, oy),
        model.target_nll(g, enc_x, my.fragment, false, oy),
        model.target_nll(g, enc_y, mx.fragment, false, ox),
    };
    for (std::size_t i = 0; i < kSupervisedTerms; ++i) sums[i] = accumulate(g, sums[i], t[i]);
    ++used;
  }
  if (skipped > 0) spdlog::debug("mass: skipped {} pair(s) with a side shorter than {} tokens", skipped, kMinLength);
  SupervisedTerms out;
  if (used == 0) {
    for (auto& t : out.terms) t = g.constant(num::Tensor::scalar(0.0));
    out.total = g.constant(num::Tensor::scalar(0.0));
    return out;
  }
  for (std::size_t i = 0; i < kSupervisedTerms; ++i) {
    out.terms[i] = batch_mean(g, sums[i], used);
    out.total = accumulate(g, out.total, out.terms[i]);
  }
  return out;
}

NodeId sup_loss(Graph& g, const Model& model, std::span<const SentencePair> batch, num::Rng& rng,
                const MaskConfig& cfg, const ForwardOptions& opt) {
  return sup_terms(g, model, batch, rng, cfg, opt).total;
}

namespace {

template <typename Build>
double optimise(Model& model, num::Adam& adam, num::Rng& rng, Build build) {
  Graph g;
  ForwardOptions opt;
  opt.train = true;
  opt.rng = &rng;
  NodeId loss = build(g, opt);
  const double value = g.value(loss).item();
  adam.step(model.params(), num::backward(g, loss));
  return value;
}

}  // namespace

double unsup_step(Model& model, num::Adam& adam, std::span<const TokenSequence> batch, num::Rng& rng,
                  const MaskConfig& cfg) {
  return optimise(model, adam, rng, [&](Graph& g, const ForwardOptions& opt) {
    return unsup_loss(g, model, batch, rng, cfg, opt);
  });
}

double sup_step(Model& model, num::Adam& adam, std::span<const SentencePair> batch, num::Rng& rng,
                const MaskConfig& cfg) {
  return optimise(model, adam, rng, [&](Graph& g, const ForwardOptions& opt) {
    return sup_loss(g, model, batch, rng, cfg, opt);
  });
}

double pretrain(Model& model, num::Adam& adam, const std::vector<TokenSequence>& mono_x,
                const std::vector<TokenSequence>& mono_y, std::size_t steps, std::size_t batch_size, num::Rng& rng,
                const MaskConfig& cfg) {
  if (batch_size == 0) throw Error("batch size must be positive");
  std::vector<const std::vector<TokenSequence>*> corpora;
  if (!mono_x.empty()) corpora.push_back(&mono_x);
  if (!mono_y.empty()) corpora.push_back(&mono_y);
  if (corpora.empty()) throw Error("MASS pre-training needs monolingual data");
  std::size_t short_count = 0, total = 0;
  for (const auto* c : corpora) {
    for (const auto& x : *c) short_count += trim_padding(x).size() < kMinLength ? 1 : 0;
    total += c->size();
  }
  if (short_count == total) throw Error("MASS pre-training needs sentences of at least 4 tokens");
  if (short_count > 0) spdlog::warn("mass: {} of {} monolingual sentences are too short to mask", short_count, total);
  double last = 0.0;
  std::vector<TokenSequence> batch;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto& corpus = *corpora[s % corpora.size()];
    batch.clear();
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(corpus[rng.index(corpus.size())]);
    last = unsup_step(model, adam, batch, rng, cfg);
  }
  return last;
}

}  // namespace nmt::mass
