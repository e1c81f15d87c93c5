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

#include "doctest.h"
#include "grad_util.h"
#include "nmt/numerics/ops.h"
#include "nmt/sca/sca.h"

using namespace nmt;
using namespace nmt::sca;
using num::Graph;

namespace {

LmConfig lm_config(std::size_t vocab = 10) {
  LmConfig c;
  c.vocab = vocab;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ffn = 32;
  c.max_len = 16;
  return c;
}

ModelConfig tiny(std::size_t vocab = 10, std::size_t d = 8) {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = vocab;
  c.d_model = d;
  c.n_heads = 2;
  c.d_ffn = 2 * d;
  c.layers = 1;
  c.dropout = 0.0;
  c.max_len = 16;
  return c;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("language model overfits a repeated sentence") {
  const TokenSequence s{6, 7, 8, 9, 6};
  LmTrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 4;
  tc.adam.lr = 1e-2;
  CausalLM lm = train_lm(std::vector<TokenSequence>(4, s), lm_config(), tc, 1);
  Graph g(false);
  const double per_token = g.value(lm.nll(g, s)).item() / static_cast<double>(s.size() + 1);
  CHECK(per_token < 0.05);
  for (std::size_t t = 0; t < s.size(); ++t) {
    SoftWord d = lm.distribution(std::span<const int>(s).first(t));
    CHECK(std::max_element(d.begin(), d.end()) - d.begin() == s[t]);
  }
  CHECK_THROWS_AS(train_lm({}, lm_config(), tc, 1), Error);
}

TEST_CASE("language model distributions are valid and causal") {
  CausalLM a(lm_config(), 2), b(lm_config(), 3);
  CHECK(a.params().fingerprint() != b.params().fingerprint());
  for (const CausalLM* lm : {&a, &b}) {
    SoftWord d = lm->distribution({});
    CHECK(std::abs(sum(d) - 1.0) < 1e-12);
    for (double p : d) CHECK(p >= 0.0);
  }
  const TokenSequence x{6, 7, 8, 9}, y{6, 7, 9, 6};
  auto dx = a.position_distributions(x), dy = a.position_distributions(y);
  for (std::size_t t = 0; t < x.size(); ++t) {
    CHECK(std::abs(sum(dx[t]) - 1.0) < 1e-12);
    const SoftWord single = a.distribution(std::span<const int>(x).first(t));
    for (std::size_t j = 0; j < single.size(); ++j) CHECK(std::abs(single[j] - dx[t][j]) < 1e-12);
  }
  for (std::size_t t = 0; t <= 2; ++t) CHECK(dx[t] == dy[t]);
  CHECK(dx[3] != dy[3]);

  auto flat = a.position_distributions(x, 50.0);
  double hx = 0.0, hf = 0.0;
  for (std::size_t j = 0; j < flat[0].size(); ++j) {
    hx -= dx[0][j] * std::log(dx[0][j]);
    hf -= flat[0][j] * std::log(flat[0][j]);
  }
  CHECK(hf > hx);
}

TEST_CASE("soft embedding is the expected embedding row") {
  num::Rng rng(4);
  num::Tensor E = nmt::testing::random_matrix(rng, 7, 4);
  std::vector<double> onehot(7, 0.0);
  onehot[3] = 1.0;
  auto e3 = soft_embedding(onehot, E);
  for (std::size_t c = 0; c < 4; ++c) CHECK(e3[c] == E.at(3, c));

  std::vector<double> pair(7, 0.0);
  pair[1] = pair[5] = 0.5;
  auto mid = soft_embedding(pair, E);
  for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(mid[c] - (E.at(1, c) + E.at(5, c)) / 2.0) < 1e-15);

  std::vector<double> p(7), q(7);
  double zp = 0.0, zq = 0.0;
  for (std::size_t j = 0; j < 7; ++j) zp += (p[j] = rng.uniform()), zq += (q[j] = rng.uniform());
  for (std::size_t j = 0; j < 7; ++j) p[j] /= zp, q[j] /= zq;
  auto ep = soft_embedding(p, E), eq = soft_embedding(q, E);
  for (std::size_t c = 0; c < 4; ++c) {
    double loop = 0.0;
    for (std::size_t j = 0; j < 7; ++j) loop += E.values()[j * 4 + c] * p[j];
    CHECK(std::abs(ep[c] - loop) < 1e-14);
  }
  const double lam = 0.3;
  std::vector<double> mix(7);
  for (std::size_t j = 0; j < 7; ++j) mix[j] = lam * p[j] + (1 - lam) * q[j];
  auto em = soft_embedding(mix, E);
  for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(em[c] - (lam * ep[c] + (1 - lam) * eq[c])) < 1e-14);
  CHECK_THROWS_AS(soft_embedding(std::vector<double>(6, 1.0 / 6), E), Error);
}

TEST_CASE("replacement rate follows gamma") {
  CausalLM lm(lm_config(), 5);
  num::Rng rng(5);
  TokenSequence src{6, 7, 8, 9, 6, 7, 8, 9, 6, 7};

  SoftInputs none = augment_source(lm, src, {.gamma = 0.0}, rng);
  for (const auto& s : none) CHECK_FALSE(s.has_value());
  SoftInputs all = augment_source(lm, src, {.gamma = 1.0}, rng);
  for (const auto& s : all) CHECK(s.has_value());

  std::size_t replaced = 0, total = 0;
  while (total < 10000) {
    for (const auto& s : augment_source(lm, src, {.gamma = 0.15}, rng)) replaced += s.has_value(), ++total;
  }
  const double mean = 0.15 * total, sd = std::sqrt(total * 0.15 * 0.85);
  CHECK(std::abs(static_cast<double>(replaced) - mean) < 3.0 * sd);
  CHECK_THROWS_AS(augment_source(lm, src, {.gamma = 1.5}, rng), Error);
}

TEST_CASE("gamma zero equals the baseline loss bit for bit") {
  Model m(transformer_genotype(1), tiny(), 6);
  CausalLM lm(lm_config(), 6);
  num::Rng rng(6);
  const TokenSequence s{6, 7, 8}, t{9, 8};
  SoftInputs soft = augment_source(lm, s, {.gamma = 0.0}, rng);
  Graph g1(false), g2(false);
  ForwardOptions opt{.soft = &soft};
  CHECK(g1.value(m.sequence_nll(g1, s, t, true, opt)).item() == g2.value(m.sequence_nll(g2, s, t)).item());
}

TEST_CASE("SCA loss gradients match finite differences") {
  ModelConfig c = tiny(8, 4);
  c.d_ffn = 6;
  Model m(transformer_genotype(1), c, 7);
  LmConfig lc = lm_config(8);
  lc.d_model = 4;
  CausalLM lm(lc, 7);
  num::Rng rng(7);
  const TokenSequence s{6, 7, 6}, t{7, 6};
  SoftInputs soft = augment_source(lm, s, {.gamma = 1.0}, rng);
  ForwardOptions opt{.soft = &soft};
  CHECK(nmt::testing::gradient_error(m.params(), [&](Graph& g) { return m.sequence_nll(g, s, t, true, opt); }) <
        1e-4);
  Graph g;
  num::NodeId loss = m.sequence_nll(g, s, t, true, opt);
  auto grads = num::backward(g, loss);
  const auto& ge = grads.at(&m.params().at("embed"));
  // Unseen source rows get gradient only through the soft distributions.
  double row5 = 0.0;
  for (std::size_t col = 0; col < ge.cols(); ++col) row5 += std::abs(ge.at(5, col));
  CHECK(row5 > 0.0);
}

TEST_CASE("SCA training reduces the loss") {
  Model m(transformer_genotype(1), tiny(10, 16), 8);
  CausalLM lm(lm_config(), 8);
  num::Adam adam({.lr = 5e-3});
  num::Rng rng(8);
  std::vector<SentencePair> data{{{6, 7, 8}, {8, 7, 6}}, {{9, 6}, {6, 9}}};
  const double first = train_epoch(m, adam, data, 2, lm, {}, rng);
  double last = first;
  for (int i = 0; i < 60; ++i) last = train_epoch(m, adam, data, 2, lm, {}, rng);
  CHECK(last < 0.5 * first);
}

TEST_CASE("language model checkpoint round trip") {
  CausalLM lm(lm_config(), 9);
  CausalLM back = CausalLM::from_checkpoint(num::decode_checkpoint(num::encode_checkpoint(lm.to_checkpoint())));
  CHECK(back.config() == lm.config());
  CHECK(back.distribution(TokenSequence{6, 7}) == lm.distribution(TokenSequence{6, 7}));
}
