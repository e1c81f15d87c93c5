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

#include <cmath>
#include <functional>
#include <set>

#include "doctest.h"
#include "grad_util.h"
#include "nmt/madl/madl.h"
#include "nmt/numerics/ops.h"

using namespace nmt;
using namespace nmt::madl;
using num::Graph;

namespace {

ModelConfig tiny(std::size_t vocab = 8, std::size_t d = 8) {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = vocab;
  c.d_model = d;
  c.n_heads = 2;
  c.d_ffn = 2 * d;
  c.layers = 1;
  c.dropout = 0.0;
  c.max_len = 12;
  return c;
}

Model make(std::uint64_t seed, ModelConfig c = tiny()) { return Model(transformer_genotype(1), c, seed); }

// Exhaustive argmax of sum_i w_i log P(y|x; m_i) over outputs of up to
// `max_len` tokens drawn from {6, 7}.
TokenSequence brute_force(const AgentEnsemble& e, const TokenSequence& x, std::size_t max_len) {
  double best = -1e300;
  TokenSequence arg;
  std::function<void(TokenSequence)> rec = [&](TokenSequence y) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) s += e.weights[i] * score_sequence(*e.models[i], x, y);
    if (s > best) best = s, arg = y;
    if (y.size() == max_len) return;
    for (int t : {6, 7}) {
      TokenSequence z = y;
      z.push_back(t);
      rec(z);
    }
  };
  rec({});
  return arg;
}

}  // namespace

TEST_CASE("weights must lie on the simplex") {
  CHECK_NOTHROW(validate_weights(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}));
  CHECK_NOTHROW(validate_weights(std::vector<double>{1.0}));
  CHECK_THROWS_WITH_AS(validate_weights(std::vector<double>{0.5, 0.4}), doctest::Contains("0.9"), Error);
  CHECK_THROWS_AS(validate_weights(std::vector<double>{1.5, -0.5}), Error);
}

TEST_CASE("combined scores reduce to single models and weighted means") {
  Model a = make(1), b = make(2);
  const TokenSequence x{6, 7, 6}, pre{7};
  const auto la = logprobs(a, x, pre), lb = logprobs(b, x, pre);
  CHECK(combined_logprob(AgentEnsemble{{&a}, {1.0}}, x, pre) == la);
  CHECK(combined_logprob(AgentEnsemble{{&a, &b}, {1.0, 0.0}}, x, pre) == la);
  const auto mean = combined_logprob(equal_weights({&a, &b}), x, pre);
  for (std::size_t t = 0; t < la.size(); ++t) CHECK(std::abs(mean[t] - (la[t] + lb[t]) / 2.0) < 1e-12);
  ModelConfig other = tiny(9);
  Model c = make(3, other);
  CHECK_THROWS_AS(combined_logprob(equal_weights({&a, &c}), x, pre), Error);
}

TEST_CASE("combined decoding") {
  Model a = make(4), b = make(5), c = make(6);
  const TokenSequence x{6, 7, 7};
  SUBCASE("single agent is plain beam search") {
    BeamConfig cfg{.beam = 3, .max_len = 5};
    auto h1 = combined_decode(AgentEnsemble{{&a}, {1.0}}, x, cfg);
    auto h2 = beam_search(a, x, cfg);
    REQUIRE(h1.size() == h2.size());
    for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i].tokens == h2[i].tokens);
  }
  SUBCASE("exhaustive beam finds the ensemble argmax") {
    AgentEnsemble e{{&a, &b}, {0.3, 0.7}};
    BeamConfig cfg{.beam = 64, .length_penalty = 0.0, .max_len = 3};
    CHECK(combined_decode(e, x, cfg).front().tokens == brute_force(e, x, 3));
  }
  SUBCASE("order of agents is irrelevant") {
    BeamConfig cfg{.beam = 4, .max_len = 6};
    auto h1 = combined_decode(AgentEnsemble{{&a, &b, &c}, {0.2, 0.3, 0.5}}, x, cfg);
    auto h2 = combined_decode(AgentEnsemble{{&c, &a, &b}, {0.5, 0.2, 0.3}}, x, cfg);
    REQUIRE(h1.size() == h2.size());
    for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i].tokens == h2[i].tokens);
  }
}

TEST_CASE("single agents without monolingual data reduce to two baseline losses") {
  Model f = make(7), g = make(8);
  std::vector<SentencePair> bi{{{6, 7}, {7, 7, 6}}, {{7}, {6}}};
  Graph gr(false);
  Terms t = loss_terms(gr, AgentEnsemble{{&f}, {1.0}}, AgentEnsemble{{&g}, {1.0}}, bi, {}, {});
  Graph ref(false);
  const double base = ref.value(batch_nll(ref, f, bi)).item() + ref.value(batch_nll(ref, g, reversed_pairs(bi))).item();
  CHECK(gr.value(t.total).item() == base);
}

TEST_CASE("reconstruction term matches a hand trace") {
  Model f0 = make(9), f1 = make(10), g0 = make(11), g1 = make(12);
  AgentEnsemble F{{&f0, &f1}, {0.5, 0.5}}, G{{&g0, &g1}, {0.6, 0.4}};
  const TokenSequence x{7, 6, 6};
  Corpora data{{{{6}, {7}}}, {x}, {}};
  BeamConfig cfg{.beam = 64, .length_penalty = 0.0, .max_len = 3};
  Graph gr(false);
  Terms t = loss(gr, F, G, data, cfg);
  const TokenSequence yhat = brute_force(F, x, 3);
  const double expected = -0.6 * score_sequence(g0, yhat, x);
  CHECK(std::abs(gr.value(t.reconstruct_x).item() - expected) < 1e-12);
  CHECK_FALSE(t.reconstruct_y.valid());
}

TEST_CASE("gradients reach only the trainable agents") {
  Model f0 = make(13), f1 = make(14), g0 = make(15), g1 = make(16);
  AgentEnsemble F = equal_weights({&f0, &f1}), G = equal_weights({&g0, &g1});
  Corpora data{{{{6, 7}, {7, 6}}}, {{6, 6, 7}}, {{7, 7}}};
  auto keys = [&] {
    Graph gr;
    Terms t = loss(gr, F, G, data, {.beam = 2, .max_len = 4});
    const double v = gr.value(t.total).item();
    std::set<const num::Parameter*> ks;
    for (const auto& [p, _] : num::backward(gr, t.total)) ks.insert(p);
    return std::make_pair(v, ks);
  };
  auto [v1, k1] = keys();
  for (const auto* p : k1) {
    bool own = false;
    for (std::size_t i = 0; i < f0.params().size(); ++i) own |= p == &f0.params()[i];
    for (std::size_t i = 0; i < g0.params().size(); ++i) own |= p == &g0.params()[i];
    CHECK(own);
  }
  for (double& w : f1.params().at("out.b").value.values()) w += 3.0;
  for (double& w : g1.params().at("out.b").value.values()) w -= 2.0;
  f1.params().at("out.b").value.values()[6] += 5.0;
  auto [v2, k2] = keys();
  CHECK(v1 != v2);
  CHECK(k1 == k2);
}

TEST_CASE("MADL bitext and reconstruction gradients match finite differences") {
  ModelConfig c = tiny(8, 4);
  c.d_ffn = 6;
  Model f0 = make(17, c), g0 = make(18, c), f1 = make(19, c);
  AgentEnsemble F{{&f0, &f1}, {0.5, 0.5}}, G{{&g0}, {1.0}};
  std::vector<SentencePair> bi{{{6, 7}, {7, 6, 6}}};
  std::vector<SentencePair> px{{{7, 7}, {6, 7}}}, py{{{6}, {7, 6}}};
  auto build = [&](Graph& g) { return loss_terms(g, F, G, bi, px, py).total; };
  CHECK(nmt::testing::gradient_error(f0.params(), build) < 1e-4);
  CHECK(nmt::testing::gradient_error(g0.params(), build) < 1e-4);
}

TEST_CASE("training updates only the primary agents") {
  Model f0 = make(20), f1 = make(21), g0 = make(22), g1 = make(23);
  AgentEnsemble F = equal_weights({&f0, &f1}), G = equal_weights({&g0, &g1});
  Corpora data{{{{6, 7}, {7, 6}}, {{7, 7, 6}, {6, 7, 7}}}, {{6, 6, 7}}, {{7, 7}}};
  const auto h0 = f0.params().fingerprint(), h1 = f1.params().fingerprint(), h2 = g1.params().fingerprint();
  num::Rng rng(1);

  TrainConfig none;
  none.epochs = 0;
  train(F, G, data, none, rng);
  CHECK(f0.params().fingerprint() == h0);

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 1;
  cfg.refresh_every_n_epochs = 1;
  TrainStats s = train(F, G, data, cfg, rng);
  CHECK(s.steps == 4);
  CHECK(s.decodes == 2);
  CHECK(f0.params().fingerprint() != h0);
  CHECK(f1.params().fingerprint() == h1);
  CHECK(g1.params().fingerprint() == h2);
}

TEST_CASE("divergence restores the last finite state") {
  Model f0 = make(24), g0 = make(25);
  AgentEnsemble F{{&f0}, {1.0}}, G{{&g0}, {1.0}};
  Corpora data{{{{6, 7}, {7, 6}}}, {}, {}};
  TrainConfig cfg;
  cfg.adam.lr = 1e308;
  cfg.epochs = 3;
  num::Rng rng(2);
  const auto before = f0.params().fingerprint();
  bool called = false;
  CHECK_THROWS_AS(train(F, G, data, cfg, rng, [&](const Model&, const Model&) { called = true; }), NumericError);
  CHECK(called);
  CHECK(f0.params().fingerprint() == before);
}

TEST_CASE("ensemble manifest") {
  auto m = parse_manifest("# agents\n0.5\ta.ckpt\n0.5\tb.ckpt\n");
  REQUIRE(m.size() == 2);
  CHECK(m[1].path == "b.ckpt");
  CHECK_THROWS_AS(parse_manifest("0.5\ta\n0.4\tb\n"), Error);
  CHECK_THROWS_AS(parse_manifest("x\ta\n"), Error);
}
