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

#include "nmt/madl/madl.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "nmt/numerics/ops.h"

namespace nmt::madl {

using num::Graph;
using num::NodeId;

void validate_weights(std::span<const double> weights) {
  if (weights.empty()) throw Error("ensemble weights are empty");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("ensemble weight " + std::to_string(w) + " is negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "ensemble weights sum to " << sum << ", not 1";
    throw Error(os.str());
  }
}

void AgentEnsemble::validate() const {
  if (models.empty()) throw Error("ensemble has no models");
  if (models.size() != weights.size()) throw Error("ensemble has " + std::to_string(models.size()) +
                                                   " models but " + std::to_string(weights.size()) + " weights");
  validate_weights(weights);
  for (const Model* m : models) {
    if (m == nullptr) throw Error("ensemble holds a null model");
    if (m->config().tgt_vocab != models.front()->config().tgt_vocab ||
        m->config().src_vocab != models.front()->config().src_vocab) {
      throw Error("ensemble models disagree on vocabulary size");
    }
  }
}

AgentEnsemble equal_weights(std::vector<Model*> models) {
  AgentEnsemble e{std::move(models), {}};
  e.weights.assign(e.models.size(), e.models.empty() ? 0.0 : 1.0 / static_cast<double>(e.models.size()));
  return e;
}

std::vector<double> combined_logprob(const AgentEnsemble& ens, std::span<const EncodedSource> encoded,
                                     std::span<const int> prefix) {
  std::vector<double> out;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const std::vector<double> lp = ens.models[i]->next_logprobs(encoded[i], prefix);
    if (out.empty()) out.assign(lp.size(), 0.0);
    for (std::size_t t = 0; t < lp.size(); ++t) out[t] += ens.weights[i] * lp[t];
  }
  return out;
}

std::vector<double> combined_logprob(const AgentEnsemble& ens, std::span<const int> source,
                                     std::span<const int> prefix) {
  ens.validate();
  std::vector<EncodedSource> enc;
  for (const Model* m : ens.models) enc.push_back(m->encode_source(source));
  return combined_logprob(ens, enc, prefix);
}

std::vector<Hypothesis> combined_decode(const AgentEnsemble& ens, std::span<const int> source, const BeamConfig& cfg) {
  ens.validate();
  std::vector<EncodedSource> enc;
  BeamConfig c = cfg;
  std::size_t cap = SIZE_MAX;
  for (const Model* m : ens.models) {
    enc.push_back(m->encode_source(source));
    cap = std::min(cap, m->config().max_len - 1);
  }
  if (c.max_len == 0) c.max_len = auto_max_len(ens.primary(), trim_padding(source).size());
  c.max_len = std::min(c.max_len, cap);
  return beam_search([&](std::span<const int> prefix) { return combined_logprob(ens, enc, prefix); }, c);
}

std::vector<TokenSequence> combined_translate_all(const AgentEnsemble& ens, const std::vector<TokenSequence>& sources,
                                                  const BeamConfig& cfg) {
  ens.validate();
  std::vector<TokenSequence> out(sources.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < sources.size(); ++i) {
    try {
      auto h = combined_decode(ens, sources[i], cfg);
      if (!h.empty()) out[i] = std::move(h.front().tokens);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

PseudoPairs decode_mono(const AgentEnsemble& f, const AgentEnsemble& g, const std::vector<TokenSequence>& mono_x,
                        const std::vector<TokenSequence>& mono_y, const BeamConfig& cfg) {
  PseudoPairs out;
  const auto fy = combined_translate_all(f, mono_x, cfg);
  for (std::size_t i = 0; i < mono_x.size(); ++i) out.x_from_fy.push_back({fy[i], mono_x[i]});
  const auto gx = combined_translate_all(g, mono_y, cfg);
  for (std::size_t i = 0; i < mono_y.size(); ++i) out.y_from_gx.push_back({gx[i], mono_y[i]});
  return out;
}

Terms loss_terms(Graph& g, const AgentEnsemble& f, const AgentEnsemble& gens, std::span<const SentencePair> bitext,
                 std::span<const SentencePair> x_from_fy, std::span<const SentencePair> y_from_gx,
                 const ForwardOptions& fopt, const ForwardOptions& gopt) {
  f.validate();
  gens.validate();
  if (bitext.empty()) throw Error("MADL needs a non-empty bitext batch");
  const Model& f0 = f.primary();
  const Model& g0 = gens.primary();
  Terms t;
  t.bitext_f = batch_nll(g, f0, bitext, fopt);
  const std::vector<SentencePair> rev = reversed_pairs(bitext);
  t.bitext_g = batch_nll(g, g0, rev, gopt);
  t.total = num::add(g, t.bitext_f, t.bitext_g);
  if (!x_from_fy.empty()) {
    t.reconstruct_x = num::scale(g, batch_nll(g, g0, x_from_fy, gopt), gens.weights.front());
    t.total = num::add(g, t.total, t.reconstruct_x);
  }
  if (!y_from_gx.empty()) {
    t.reconstruct_y = num::scale(g, batch_nll(g, f0, y_from_gx, fopt), f.weights.front());
    t.total = num::add(g, t.total, t.reconstruct_y);
  }
  return t;
}

Terms loss(Graph& g, const AgentEnsemble& f, const AgentEnsemble& gens, const Corpora& data, const BeamConfig& decode) {
  const PseudoPairs pp = decode_mono(f, gens, data.mono_x, data.mono_y, decode);
  return loss_terms(g, f, gens, data.bitext, pp.x_from_fy, pp.y_from_gx);
}

namespace {

std::vector<TokenSequence> subsample(const std::vector<TokenSequence>& mono, double fraction, num::Rng& rng) {
  if (fraction >= 1.0) return mono;
  std::vector<TokenSequence> copy = mono;
  rng.shuffle(copy);
  copy.resize(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(copy.size()))));
  return copy;
}

std::vector<SentencePair> draw(const std::vector<SentencePair>& pool, std::size_t n, num::Rng& rng) {
  std::vector<SentencePair> out;
  if (pool.empty()) return out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng.index(pool.size())]);
  return out;
}

}  // namespace

TrainStats train(const AgentEnsemble& f, const AgentEnsemble& g, const Corpora& data, const TrainConfig& cfg,
                 num::Rng& rng, const std::function<void(const Model&, const Model&)>& on_divergence) {
  f.validate();
  g.validate();
  if (data.bitext.empty()) throw Error("MADL needs bitext");
  if (cfg.batch_size == 0) throw Error("batch size must be positive");
  Model& f0 = f.primary();
  Model& g0 = g.primary();
  num::Adam adam_f(cfg.adam), adam_g(cfg.adam);
  num::ParamStore safe_f = f0.params(), safe_g = g0.params();
  TrainStats stats;
  PseudoPairs pseudo;
  std::vector<SentencePair> bitext = data.bitext;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool refresh = epoch == 0 || (cfg.refresh_every_n_epochs > 0 && epoch % cfg.refresh_every_n_epochs == 0);
    if (refresh) {
      pseudo = decode_mono(f, g, subsample(data.mono_x, cfg.mono_fraction, rng),
                           subsample(data.mono_y, cfg.mono_fraction, rng), cfg.decode);
      ++stats.decodes;
    }
    rng.shuffle(bitext);
    for (std::size_t i = 0; i < bitext.size(); i += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, bitext.size() - i);
      const auto bx = draw(pseudo.x_from_fy, cfg.mono_batch_size, rng);
      const auto by = draw(pseudo.y_from_gx, cfg.mono_batch_size, rng);
      try {
        Graph graph;
        ForwardOptions opt{.train = true, .rng = &rng};
        Terms t = loss_terms(graph, f, g, std::span<const SentencePair>(bitext).subspan(i, n), bx, by, opt, opt);
        stats.last_loss = graph.value(t.total).item();
        const num::GradientMap grads = num::backward(graph, t.total);
        adam_f.step(f0.params(), grads);
        adam_g.step(g0.params(), grads);
        for (const auto* store : {&f0.params(), &g0.params()}) {
          for (std::size_t p = 0; p < store->size(); ++p) {
            if (!(*store)[p].value.all_finite()) throw NumericError("parameter " + (*store)[p].name + " is not finite");
          }
        }
      } catch (const NumericError& e) {
        f0.params().assign_values(safe_f);
        g0.params().assign_values(safe_g);
        if (on_divergence) on_divergence(f0, g0);
        throw NumericError("madl: diverged at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(stats.steps) + " (" + e.what() + "); restored last finite parameters");
      }
      safe_f.assign_values(f0.params());
      safe_g.assign_values(g0.params());
      ++stats.steps;
    }
    spdlog::debug("madl: epoch {} loss {:.4f}", epoch, stats.last_loss);
  }
  return stats;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("manifest line " + std::to_string(lineno) + ": expected weight<TAB>path");
    try {
      out.push_back({std::stod(line.substr(0, tab)), line.substr(tab + 1)});
    } catch (const std::logic_error&) {
      throw Error("manifest line " + std::to_string(lineno) + ": bad weight");
    }
  }
  std::vector<double> w;
  for (const auto& e : out) w.push_back(e.weight);
  validate_weights(w);
  return out;
}

}  // namespace nmt::madl
