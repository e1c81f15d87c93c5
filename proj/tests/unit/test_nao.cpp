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
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "nmt/nao/arch.h"
#include "nmt/nao/search.h"
#include "nmt/nao/surrogate.h"
#include "nmt/numerics/ops.h"

using namespace nmt;
using namespace nmt::nao;

namespace {

// Every token sequence the grammar admits for slots [begin, end), the other
// positions taken from `base`.
template <typename F>
void enumerate(const std::vector<ArchSlot>& slots, std::size_t begin, std::size_t end, ArchSequence& seq, F&& f) {
  if (begin == end) {
    f(seq);
    return;
  }
  for (int t : allowed_tokens(slots[begin])) {
    seq[begin] = t;
    enumerate(slots, begin + 1, end, seq, f);
  }
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k < j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j - 1);
      i = j;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += ra[i] / n, mb += rb[i] / n;
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

// Smooth made-up quality: share of attention/ffn branches plus a wiring term.
double toy_score(const Genotype& g) {
  double good = 0, n = 0;
  for (Side side : {Side::encoder, Side::decoder}) {
    for (const auto& l : g.side(side)) {
      for (const auto& node : l.nodes) {
        for (const auto& br : node.branches) {
          good += br.op == OpKind::self_attention || br.op == OpKind::ffn || br.op == OpKind::cross_attention;
          good += 0.5 * (br.input > 0);
          n += 1.5;
        }
      }
    }
  }
  return good / n;
}

std::vector<Genotype> unique_genotypes(std::size_t layers, std::size_t n, num::Rng& rng) {
  std::set<std::string> seen;
  std::vector<Genotype> out;
  while (out.size() < n) {
    Genotype g = random_genotype(layers, rng);
    if (seen.insert(to_text(g)).second) out.push_back(std::move(g));
  }
  return out;
}

ModelConfig tiny() {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = 10;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ffn = 32;
  c.layers = 1;
  c.dropout = 0.0;
  c.max_len = 12;
  return c;
}

std::vector<SentencePair> copy_data(std::size_t n, num::Rng& rng) {
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSequence s(3 + rng.index(4));
    for (int& t : s) t = 6 + static_cast<int>(rng.index(4));
    out.push_back({s, s});
  }
  return out;
}

Genotype all_zero(std::size_t layers) {
  Genotype g = transformer_genotype(layers);
  for (auto* side : {&g.encoder, &g.decoder}) {
    for (auto& l : *side) {
      for (auto& n : l.nodes) {
        for (auto& b : n.branches) b.op = OpKind::zero;
      }
    }
  }
  return g;
}

}  // namespace

TEST_CASE("architecture codec is a bijection on one-layer genotypes") {
  const auto slots = arch_slots(1);
  REQUIRE(slots.size() == arch_length(1));
  const std::size_t enc_end = kEncoderNodes * 4;
  ArchSequence base = encode_genotype(transformer_genotype(1));
  REQUIRE(base.size() == slots.size());
  // Layers are coded independently, so enumerating each layer with the other
  // fixed covers the product space.
  std::size_t enc = 0, dec = 0;
  std::set<std::string> enc_texts;
  ArchSequence seq = base;
  enumerate(slots, 0, enc_end, seq, [&](const ArchSequence& s) {
    const Genotype g = decode_genotype(s, 1);
    REQUIRE(is_valid(g));
    REQUIRE(encode_genotype(g) == s);
    enc_texts.insert(to_text(g));
    ++enc;
  });
  CHECK(enc == 25 * 100);
  CHECK(enc_texts.size() == enc);
  seq = base;
  enumerate(slots, enc_end, slots.size(), seq, [&](const ArchSequence& s) {
    const Genotype g = decode_genotype(s, 1);
    if (encode_genotype(g) != s) FAIL("round trip");
    ++dec;
  });
  CHECK(dec == 36 * 144 * 324);
  // Nothing outside the grammar decodes.
  ArchSequence bad = base;
  bad[1] = op_token(OpKind::cross_attention);
  CHECK_THROWS_AS(decode_genotype(bad, 1), GenotypeError);
  bad = base;
  bad[0] = 1;
  CHECK_THROWS_AS(decode_genotype(bad, 1), GenotypeError);
  CHECK_THROWS_AS(decode_genotype(ArchSequence(3, 0), 1), GenotypeError);
}

TEST_CASE("encoder and predictor basics") {
  SurrogateConfig cfg;
  cfg.layers = 2;
  cfg.d_arch = 16;
  cfg.d_hidden = 8;
  const Surrogate s(cfg, 3);
  const auto a = encode_genotype(transformer_genotype(2));
  const auto e = s.encode(a);
  CHECK(e.size() == 16);
  CHECK(s.encode(a) == e);
  for (double v : e) CHECK(std::isfinite(v));
  ArchSequence bad = a;
  bad[1] = 99;
  CHECK_THROWS(s.encode(bad));

  SUBCASE("predictor gradient matches central differences") {
    const auto grad = s.predict_grad(e);
    for (std::size_t i = 0; i < e.size(); ++i) {
      auto hi = e, lo = e;
      hi[i] += 1e-5;
      lo[i] -= 1e-5;
      const double fd = (s.predict(hi) - s.predict(lo)) / 2e-5;
      CHECK(std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6}) < 1e-4);
    }
  }
  SUBCASE("ascent") {
    CHECK(ascend(s, e, 0.0) == e);
    CHECK(s.predict(ascend(s, e, 1e-3)) >= s.predict(e));
    CHECK_THROWS(ascend(s, e, -1.0));
  }
}

TEST_CASE("linear predictor moves the embedding along its weights") {
  SurrogateConfig cfg;
  cfg.layers = 1;
  cfg.d_arch = 6;
  cfg.d_hidden = 0;
  const Surrogate s(cfg, 9);
  const ArchEmbedding e{0.1, -0.2, 0.3, 0.0, 0.5, -0.7};
  const auto& w = s.params().at("nao.pred.w").value;
  const auto moved = ascend(s, e, 2.5);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(moved[i] == doctest::Approx(e[i] + 2.5 * w[i]).epsilon(1e-12));
}

TEST_CASE("constrained decoding always yields valid genotypes") {
  SurrogateConfig cfg;
  cfg.layers = 2;
  cfg.d_arch = 8;
  const Surrogate s(cfg, 4);
  num::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    ArchEmbedding e(8);
    for (double& v : e) v = rng.normal(0.0, 3.0);
    const Genotype g = decode_genotype(s.decode(e), 2);
    CHECK(is_valid(g));
    for (const auto& l : g.encoder) {
      for (const auto& n : l.nodes) {
        for (const auto& b : n.branches) CHECK(b.op != OpKind::cross_attention);
      }
    }
  }
}

TEST_CASE("trained surrogate reconstructs and ranks") {
  SurrogateConfig cfg;
  cfg.layers = 1;
  cfg.d_arch = 32;
  cfg.d_hidden = 32;
  Surrogate s(cfg, 11);
  num::Rng rng(7);
  const auto gens = unique_genotypes(1, 300, rng);
  std::vector<ArchExample> train;
  std::vector<ArchSequence> train_archs;
  for (std::size_t i = 0; i < 200; ++i) {
    train.push_back({encode_genotype(gens[i]), toy_score(gens[i])});
    train_archs.push_back(train.back().arch);
  }
  SurrogateTrainConfig tc;
  tc.epochs = 200;
  tc.adam.lr = 1e-2;
  const auto loss = fit_surrogate(s, train, tc, rng);
  MESSAGE("mse " << loss.mse << " recon " << loss.recon);
  CHECK(reconstruction_accuracy(s, train_archs) >= 0.95);

  std::vector<double> truth, pred;
  for (std::size_t i = 200; i < 300; ++i) {
    truth.push_back(toy_score(gens[i]));
    pred.push_back(s.predict(s.encode(encode_genotype(gens[i]))));
  }
  const double rho = spearman(truth, pred);
  MESSAGE("held-out spearman " << rho);
  CHECK(rho > 0.5);

  std::set<std::vector<double>> embeddings;
  for (const auto& a : train_archs) embeddings.insert(s.encode(a));
  CHECK(embeddings.size() == train_archs.size());
}

TEST_CASE("constant targets flatten the predictor") {
  SurrogateConfig cfg;
  cfg.layers = 1;
  cfg.d_arch = 8;
  cfg.d_hidden = 8;
  cfg.recon_weight = 0.0;
  Surrogate s(cfg, 2);
  num::Rng rng(3);
  const auto gens = unique_genotypes(1, 40, rng);
  std::vector<ArchExample> data;
  for (const auto& g : gens) data.push_back({encode_genotype(g), 0.4});
  SurrogateTrainConfig tc;
  tc.epochs = 200;
  fit_surrogate(s, data, tc, rng);
  double m = 0, v = 0;
  std::vector<double> preds;
  for (const auto& d : data) preds.push_back(s.predict(s.encode(d.arch)));
  for (double x : preds) m += x / static_cast<double>(preds.size());
  for (double x : preds) v += (x - m) * (x - m) / static_cast<double>(preds.size());
  CHECK(m == doctest::Approx(0.4).epsilon(0.02));
  CHECK(v < 1e-4);
}

TEST_CASE("surrogate checkpoint round trip") {
  SurrogateConfig cfg;
  cfg.layers = 1;
  cfg.d_arch = 8;
  const Surrogate s(cfg, 5);
  const Surrogate back = Surrogate::from_checkpoint(num::decode_checkpoint(num::encode_checkpoint(s.to_checkpoint())));
  const auto a = encode_genotype(transformer_genotype(1));
  CHECK(back.encode(a) == s.encode(a));
  CHECK(back.config().d_hidden == cfg.d_hidden);
}

TEST_CASE("shared-weight evaluation") {
  num::Rng rng(1);
  const auto data = copy_data(80, rng);
  const auto dev = copy_data(20, rng);
  Model net = Model::supernet(tiny(), 1);

  SUBCASE("one op per branch is active") {
    num::Rng grng(5);
    for (int trial = 0; trial < 5; ++trial) {
      const Genotype gen = random_genotype(1, grng);
      net.set_genotype(gen);
      num::Graph g;
      const auto grads = num::backward(g, batch_nll(g, net, std::span(data).first(4)));
      for (const auto& [p, t] : grads) {
        // Branch weights are named <side>.<layer>.n<node>.b<branch>.<op>.<weight>.
        std::istringstream in(p->name);
        std::string side, layer, node, branch, op;
        std::getline(in, side, '.');
        std::getline(in, layer, '.');
        if (!std::getline(in, node, '.') || node.empty() || node[0] != 'n') continue;
        std::getline(in, branch, '.');
        std::getline(in, op, '.');
        const auto& genes = side == "enc" ? gen.encoder : gen.decoder;
        const auto& br = genes[std::stoul(layer)].nodes[std::stoul(node.substr(1))].branches[std::stoul(branch.substr(1))];
        CHECK(op == op_name(br.op));
      }
    }
  }
  SUBCASE("training ranks the transformer above the empty network") {
    num::Adam adam(num::AdamConfig{.lr = 3e-3});
    num::Rng trng(2);
    train_supernet(net, data, 1200, 16, adam, trng);
    EvalConfig ec;
    const auto t = shared_weight_eval(net, transformer_genotype(1), data, dev, ec, 7);
    const auto z = shared_weight_eval(net, all_zero(1), data, dev, ec, 7);
    MESSAGE("transformer " << t.y << " empty " << z.y);
    CHECK(t.y > z.y);
    ec.budget = 3;
    CHECK(shared_weight_eval(net, transformer_genotype(1), data, dev, ec, 7) ==
          shared_weight_eval(net, transformer_genotype(1), data, dev, ec, 7));
  }
}

TEST_CASE("search loop, archive and resume") {
  num::Rng rng(1);
  const auto data = copy_data(60, rng);
  const auto dev = copy_data(10, rng);
  SearchConfig cfg;
  cfg.pool = 6;
  cfg.iterations = 0;
  cfg.top_k = 3;
  cfg.supernet_steps = 40;
  cfg.surrogate.d_arch = 8;
  cfg.surrogate.d_hidden = 8;
  cfg.surrogate_train.epochs = 20;

  const auto pool_only = nao_search(tiny(), data, dev, cfg, 3);
  CHECK(pool_only.archive.size() == 6);
  for (const auto& r : pool_only.archive) CHECK(r.iteration == 0);
  CHECK(pool_only.best_so_far.size() == 1);

  cfg.iterations = 2;
  const auto dir = std::filesystem::temp_directory_path() / "desknmt_nao_test";
  std::filesystem::remove_all(dir);
  const auto full_path = dir / "full.tsv", resumed_path = dir / "resumed.tsv";
  const auto full = nao_search(tiny(), data, dev, cfg, 3, full_path);
  CHECK(full.best_so_far.size() == 3);
  CHECK(std::is_sorted(full.best_so_far.begin(), full.best_so_far.end()));
  std::set<std::string> texts;
  for (const auto& r : full.archive) texts.insert(to_text(r.genotype));
  CHECK(texts.size() == full.archive.size());
  CHECK(full.archive.front().y == full.best_so_far.back());
  std::vector<PerfRecord> pool_recs;
  for (const auto& r : full.archive) {
    if (r.iteration == 0) pool_recs.push_back(r);
  }
  CHECK(pool_recs.size() == 6);

  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string whole = slurp(full_path);
  // Cut inside the last iteration: drop its #done marker and one record.
  const auto last_done = whole.rfind("#done");
  std::string cut = whole.substr(0, last_done);
  cut.pop_back();
  cut = cut.substr(0, cut.rfind('\n') + 1);
  std::ofstream(resumed_path) << cut;
  const auto resumed = nao_search(tiny(), data, dev, cfg, 3, resumed_path);
  CHECK(slurp(resumed_path) == whole);
  CHECK(resumed.archive == full.archive);

  std::ofstream(resumed_path) << "0\t0.5\t1\t0\tE:0/ffn\n";
  try {
    nao_search(tiny(), data, dev, cfg, 3, resumed_path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("archive line 1") != std::string::npos);
  }
  std::ofstream(resumed_path) << "#done 0\nnot a record\n";
  CHECK_THROWS_WITH(nao_search(tiny(), data, dev, cfg, 3, resumed_path), doctest::Contains("archive line 2"));
  std::filesystem::remove_all(dir);
}
