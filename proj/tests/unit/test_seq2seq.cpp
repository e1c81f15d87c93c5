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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "doctest.h"
#include "grad_util.h"
#include "nmt/numerics/ops.h"
#include "nmt/seq2seq/beam.h"
#include "nmt/seq2seq/training.h"

using namespace nmt;
using num::Graph;
using num::Tensor;

namespace {

ModelConfig small_config(std::size_t vocab = 12, std::size_t layers = 2) {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = vocab;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ffn = 16;
  c.layers = layers;
  c.dropout = 0.0;
  c.max_len = 16;
  return c;
}

double nll(const Model& m, const TokenSequence& s, const TokenSequence& t) {
  Graph g(false);
  return g.value(m.sequence_nll(g, s, t)).item();
}

// Plain-loop Transformer forward for the stock genotype.
using Mat = std::vector<std::vector<double>>;

struct RefTransformer {
  const Model& m;
  std::size_t d, heads;

  const Tensor& P(const std::string& name) const { return m.params().at(name).value; }

  Mat mm(const Mat& a, const Tensor& w) const {
    Mat out(a.size(), std::vector<double>(w.cols(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t k = 0; k < w.rows(); ++k)
        for (std::size_t j = 0; j < w.cols(); ++j) out[i][j] += a[i][k] * w.at(k, j);
    return out;
  }
  static Mat plus(Mat a, const Mat& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
    return a;
  }
  static Mat bias(Mat a, const Tensor& b) {
    for (auto& r : a)
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
    return a;
  }
  Mat embed(const std::vector<int>& ids) const {
    const Tensor& t = P("embed");
    Mat out;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) {
        const double angle = static_cast<double>(p) / std::pow(10000.0, static_cast<double>(j - j % 2) / d);
        row[j] = t.at(static_cast<std::size_t>(ids[p]), j) * std::sqrt(static_cast<double>(d)) +
                 (j % 2 == 0 ? std::sin(angle) : std::cos(angle));
      }
      out.push_back(row);
    }
    return out;
  }
  Mat mha(const Mat& x, const Mat& mem, const std::string& p, bool causal) const {
    Mat q = mm(x, P(p + ".wq")), k = mm(mem, P(p + ".wk")), v = mm(mem, P(p + ".wv"));
    const std::size_t dh = d / heads;
    Mat out(x.size(), std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t n = causal ? i + 1 : mem.size();
        std::vector<double> s(n);
        double mx = -1e300, z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += q[i][h * dh + c] * k[j][h * dh + c];
          s[j] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, s[j]);
        }
        for (auto& e : s) z += (e = std::exp(e - mx));
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t c = 0; c < dh; ++c) out[i][h * dh + c] += s[j] / z * v[j][h * dh + c];
      }
    }
    return mm(out, P(p + ".wo"));
  }
  Mat ffn(const Mat& x, const std::string& p) const {
    Mat h = bias(mm(x, P(p + ".w1")), P(p + ".b1"));
    for (auto& r : h)
      for (auto& e : r) e = std::max(0.0, e);
    return bias(mm(h, P(p + ".w2")), P(p + ".b2"));
  }
  Mat ln(Mat x, const std::string& p) const {
    const Tensor &g = P(p + ".gain"), &b = P(p + ".bias");
    for (auto& r : x) {
      double mu = 0.0, var = 0.0;
      for (double e : r) mu += e;
      mu /= d;
      for (double e : r) var += (e - mu) * (e - mu);
      var /= d;
      for (std::size_t j = 0; j < d; ++j) r[j] = (r[j] - mu) / std::sqrt(var + 1e-5) * g[j] + b[j];
    }
    return x;
  }
  double nll(TokenSequence src, TokenSequence tgt) const {
    src.push_back(special::kEos);
    Mat x = embed(src);
    for (std::size_t l = 0; l < m.config().layers; ++l) {
      const std::string e = "enc." + std::to_string(l);
      Mat a = plus(x, mha(x, x, e + ".n0.b0.self_attention", false));
      Mat b = plus(a, ffn(a, e + ".n1.b0.ffn"));
      x = ln(b, e + ".ln");
    }
    std::vector<int> in{special::kBos};
    in.insert(in.end(), tgt.begin(), tgt.end());
    tgt.push_back(special::kEos);
    Mat y = embed(in);
    for (std::size_t l = 0; l < m.config().layers; ++l) {
      const std::string p = "dec." + std::to_string(l);
      Mat a = plus(y, mha(y, y, p + ".n0.b0.self_attention", true));
      Mat c = plus(a, mha(a, x, p + ".n1.b0.cross_attention", false));
      Mat e = plus(c, ffn(c, p + ".n2.b0.ffn"));
      y = ln(e, p + ".ln");
    }
    Mat logits = bias(mm(y, P("out.w")), P("out.b"));
    double total = 0.0;
    for (std::size_t t = 0; t < tgt.size(); ++t) {
      double mx = *std::max_element(logits[t].begin(), logits[t].end()), z = 0.0;
      for (double v : logits[t]) z += std::exp(v - mx);
      total -= logits[t][static_cast<std::size_t>(tgt[t])] - mx - std::log(z);
    }
    return total;
  }
};

TokenSequence greedy(const Model& m, const TokenSequence& src, std::size_t max_len) {
  EncodedSource enc = m.encode_source(src);
  TokenSequence out;
  while (out.size() < max_len) {
    auto lp = m.next_logprobs(enc, out);
    int best = -1;
    for (std::size_t t = 0; t < lp.size(); ++t) {
      if (banned_in_output(static_cast<int>(t))) continue;
      if (best < 0 || lp[t] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(t);
    }
    if (best == special::kEos) break;
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("parameter count matches the closed form") {
  ModelConfig c = small_config(12, 2);
  Model m(transformer_genotype(2), c, 1);
  const std::size_t V = 12, d = 8, f = 16, N = 2;
  const std::size_t ffn = d * f + f + f * d + d;
  const std::size_t expected = V * d + d * V + V + N * (4 * d * d + ffn + 2 * d) + N * (8 * d * d + ffn + 2 * d);
  CHECK(m.params().scalar_count() == expected);

  c.tied_output = true;
  Model tied(transformer_genotype(2), c, 1);
  CHECK(tied.params().scalar_count() == expected - d * V);
}

TEST_CASE("matches a hand-written Transformer") {
  Model m(transformer_genotype(2), small_config(), 3);
  RefTransformer ref{m, 8, 2};
  for (const auto& [s, t] : std::vector<std::pair<TokenSequence, TokenSequence>>{
           {{6, 7, 8}, {9, 10}}, {{11}, {6, 6, 7, 8}}, {{6, 7, 8, 9, 10, 11}, {}}}) {
    const double a = nll(m, s, t), b = ref.nll(s, t);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)));
  }
}

TEST_CASE("supernet running a genotype equals the standalone model") {
  ModelConfig c = small_config();
  Model super = Model::supernet(c, 5);
  num::Rng rng(9);
  Genotype g = random_genotype(2, rng);
  super.set_genotype(g);
  Model solo(g, c, 5);
  CHECK(super.params().size() > solo.params().size());
  CHECK(nll(super, {6, 7, 8}, {9, 10, 11}) == nll(solo, {6, 7, 8}, {9, 10, 11}));
}

TEST_CASE("all-zero decoder ignores the source") {
  Genotype g = transformer_genotype(1);
  for (auto& n : g.decoder[0].nodes)
    for (auto& b : n.branches) b.op = OpKind::zero;
  Model m(g, small_config(12, 1), 2);
  CHECK(nll(m, {6, 7}, {8, 9}) == nll(m, {10, 11, 11, 6}, {8, 9}));
}

TEST_CASE("initialisation is a function of the seed") {
  Model a(transformer_genotype(2), small_config(), 4), b(transformer_genotype(2), small_config(), 4);
  Model c(transformer_genotype(2), small_config(), 5);
  CHECK(a.params().fingerprint() == b.params().fingerprint());
  CHECK(a.params().fingerprint() != c.params().fingerprint());
  CHECK(nll(a, {6, 7}, {8}) == nll(b, {6, 7}, {8}));
}

TEST_CASE("next-token distributions normalise and chain to the sequence score") {
  Model m(transformer_genotype(2), small_config(), 6);
  const TokenSequence src{6, 7, 8}, tgt{9, 10, 11};
  EncodedSource enc = m.encode_source(src);
  double chained = 0.0;
  for (std::size_t t = 0; t <= tgt.size(); ++t) {
    auto lp = m.next_logprobs(enc, std::span<const int>(tgt).first(t));
    double z = 0.0;
    for (double v : lp) z += std::exp(v);
    CHECK(std::abs(z - 1.0) < 1e-12);
    chained += lp[static_cast<std::size_t>(t < tgt.size() ? tgt[t] : special::kEos)];
  }
  CHECK(std::abs(chained - score_sequence(m, src, tgt)) < 1e-10);
}

TEST_CASE("zero output projection gives a uniform distribution") {
  Model m(transformer_genotype(1), small_config(12, 1), 7);
  for (double& v : m.params().at("out.w").value.values()) v = 0.0;
  for (double v : logprobs(m, TokenSequence{6, 7}, TokenSequence{8})) CHECK(std::abs(v + std::log(12.0)) < 1e-12);
}

TEST_CASE("decoder is causal") {
  Model m(transformer_genotype(2), small_config(), 8);
  EncodedSource enc = m.encode_source(TokenSequence{6, 7});
  Graph g1(false), g2(false);
  auto run = [&](Graph& g, const TokenSequence& in) {
    return g.value(m.output_logits(g, m.decode(g, g.constant(enc.memory), in)));
  };
  Tensor a = run(g1, {special::kBos, 6, 7, 8}), b = run(g2, {special::kBos, 6, 11, 10});
  for (std::size_t j = 0; j < a.cols(); ++j) {
    CHECK(a.at(0, j) == b.at(0, j));
    CHECK(a.at(1, j) == b.at(1, j));
  }
  CHECK(a.at(2, 6) != b.at(2, 6));
}

TEST_CASE("trailing padding is ignored") {
  Model m(transformer_genotype(2), small_config(), 9);
  CHECK(nll(m, {6, 7, 8}, {9, 10}) == nll(m, {6, 7, 8, special::kPad, special::kPad}, {9, 10, special::kPad}));
}

TEST_CASE("over-length input raises") {
  Model m(transformer_genotype(1), small_config(12, 1), 1);
  TokenSequence longsrc(16, 6);
  CHECK_THROWS_AS(nll(m, longsrc, {6}), Error);
  CHECK_THROWS_AS(nll(m, {6}, {99}), Error);
}

TEST_CASE("cached cross-attention agrees with the full graph") {
  Model m(transformer_genotype(2), small_config(), 10);
  const TokenSequence src{6, 9, 8};
  EncodedSource enc = m.encode_source(src);
  auto cached = m.next_logprobs(enc, TokenSequence{7, 7});
  Graph g(false);
  num::NodeId mem = m.encode(g, src);
  num::NodeId h = m.decode(g, mem, TokenSequence{special::kBos, 7, 7});
  auto full = num::log_softmax(g.value(num::slice_rows(g, m.output_logits(g, h), 2, 1)).values());
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(std::abs(full[i] - cached[i]) < 1e-12);
}

TEST_CASE("model gradients match finite differences") {
  ModelConfig c = small_config(8, 1);
  c.d_model = 4;
  c.d_ffn = 6;
  num::Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    Model m(random_genotype(1, rng), c, static_cast<std::uint64_t>(trial));
    const double err = nmt::testing::gradient_error(m.params(), [&](Graph& g) {
      return m.sequence_nll(g, TokenSequence{6, 7, 6}, TokenSequence{7, 6});
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("training overfits a single pair") {
  ModelConfig c = small_config();
  c.d_model = 16;
  c.d_ffn = 32;
  Model m(transformer_genotype(1), (c.layers = 1, c), 11);
  num::Adam adam({.lr = 1e-2});
  num::Rng rng(1);
  std::vector<SentencePair> data{{{6, 7, 8}, {8, 7, 6}}};
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 150; ++i) {
    last = train_step(m, adam, data, rng);
    if (i == 0) first = last;
  }
  CHECK(last < 0.05 * first);
  CHECK(translate(m, data[0].src, {.beam = 3}) == data[0].tgt);
}

TEST_CASE("beam of one is greedy decoding") {
  Model m(transformer_genotype(2), small_config(), 12);
  for (const TokenSequence& s : {TokenSequence{6, 7}, TokenSequence{8, 9, 10, 11}, TokenSequence{6}}) {
    CHECK(translate(m, s, {.beam = 1, .max_len = 6}) == greedy(m, s, 6));
  }
}

TEST_CASE("exhaustive beam finds the brute-force optimum") {
  // Fixed step distributions over {EOS, 6, 7}.
  const std::size_t V = 8;
  auto scorer = [&](std::span<const int> prefix) {
    std::vector<double> lp(V, -std::numeric_limits<double>::infinity());
    std::uint64_t h = 1469598103934665603ULL;
    for (int t : prefix) h = (h ^ static_cast<std::uint64_t>(t)) * 1099511628211ULL;
    num::Rng rng(h);
    double a = rng.uniform(), b = rng.uniform(), e = rng.uniform(), z = a + b + e;
    lp[special::kEos] = std::log(e / z);
    lp[6] = std::log(a / z);
    lp[7] = std::log(b / z);
    return lp;
  };
  for (double alpha : {0.0, 1.0}) {
    BeamConfig cfg{.beam = 64, .length_penalty = alpha, .max_len = 4};
    auto hyps = beam_search(scorer, cfg);
    // Enumerate every finished sequence of up to 4 tokens.
    double best = -1e300;
    TokenSequence arg;
    std::function<void(TokenSequence, double)> rec = [&](TokenSequence p, double lp) {
      auto dist = scorer(p);
      const double fin = lp + dist[special::kEos];
      const double sc = fin / std::pow(static_cast<double>(p.size() + 1), alpha);
      if (sc > best) best = sc, arg = p;
      if (p.size() == 4) return;
      for (int t : {6, 7}) {
        TokenSequence q = p;
        q.push_back(t);
        rec(q, lp + dist[static_cast<std::size_t>(t)]);
      }
    };
    rec({}, 0.0);
    REQUIRE(hyps.front().finished);
    CHECK(hyps.front().tokens == arg);
    CHECK(std::abs(hyps.front().score - best) < 1e-12);
  }
}

TEST_CASE("right-to-left scoring reverses the target") {
  Model m(transformer_genotype(1), small_config(12, 1), 13);
  const TokenSequence src{6, 7}, pal{8, 9, 8}, asym{8, 9, 10};
  CHECK(score_sequence(m, src, pal, true) == score_sequence(m, src, pal, false));
  CHECK(score_sequence(m, src, asym, true) == score_sequence(m, src, TokenSequence{10, 9, 8}, false));
}

TEST_CASE("checkpoint round trip preserves the model") {
  num::Rng rng(4);
  Model m(random_genotype(2, rng), small_config(), 14);
  Model back = Model::from_checkpoint(num::decode_checkpoint(num::encode_checkpoint(m.to_checkpoint())));
  CHECK(back.genotype() == m.genotype());
  CHECK(back.config() == m.config());
  CHECK(nll(back, {6, 7}, {8, 9}) == nll(m, {6, 7}, {8, 9}));
}

TEST_CASE("fixed model rejects genotypes it has no weights for") {
  Model m(transformer_genotype(1), small_config(12, 1), 1);
  Genotype g = transformer_genotype(1);
  g.encoder[0].nodes[0].branches[1].op = OpKind::conv3;
  CHECK_THROWS_AS(m.set_genotype(g), GenotypeError);
}

TEST_CASE("genotype text codec and validation") {
  num::Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    Genotype g = random_genotype(3, rng);
    CHECK(is_valid(g));
    CHECK(genotype_from_text(to_text(g)) == g);
  }
  Genotype bad = transformer_genotype(2);
  bad.encoder[1].nodes[1].branches[0].input = 2;
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("encoder layer 1 node 1 branch 0"), GenotypeError);
  bad = transformer_genotype(1);
  bad.encoder[0].nodes[0].branches[0].op = OpKind::cross_attention;
  CHECK_THROWS_AS(validate(bad), GenotypeError);
  CHECK_THROWS_AS(genotype_from_text("E:0/nope,0/zero"), GenotypeError);
}

TEST_CASE("model config text codec") {
  ModelConfig c = small_config();
  c.dropout = 0.125;
  CHECK(ModelConfig::from_text(c.to_text()) == c);
  CHECK_THROWS_AS(ModelConfig::from_text(c.to_text() + "colour=blue\n"), Error);
  ModelConfig odd = c;
  odd.n_heads = 3;
  CHECK_THROWS_AS(odd.validate(), Error);
}

TEST_CASE("vocabulary") {
  Vocabulary v;
  for (const char* w : {"the", "cat", "sat"}) v.add(w);
  CHECK(v.size() == special::kCount + 3);
  CHECK(v.encode("the dog sat") == TokenSequence{6, special::kUnk, 8});
  CHECK(v.decode(TokenSequence{6, 7, special::kEos, 8}) == "the cat sat");
  Vocabulary back = Vocabulary::from_text(v.to_text());
  CHECK(back.encode("cat sat") == v.encode("cat sat"));
}
