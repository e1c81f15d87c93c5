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

#include "nmt/app/gradsuite.h"

#include <fmt/format.h>

#include <chrono>
#include <functional>

#include "nmt/madl/madl.h"
#include "nmt/mass/mass.h"
#include "nmt/nao/surrogate.h"
#include "nmt/numerics/gradcheck.h"
#include "nmt/numerics/ops.h"
#include "nmt/sca/sca.h"
#include "nmt/seq2seq/training.h"

namespace nmt::app {

namespace {

using Build = std::function<num::NodeId(num::Graph&)>;

GradCheck check(const std::string& name, const std::vector<num::ParamStore*>& stores, const Build& build, double eps,
                double tol) {
  const auto t0 = std::chrono::steady_clock::now();
  num::Graph g;
  const num::GradientMap analytic = num::backward(g, build(g));
  std::vector<num::Parameter*> params;
  std::size_t scalars = 0;
  for (auto* s : stores) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      params.push_back(&(*s)[i]);
      scalars += (*s)[i].value.size();
    }
  }
  auto loss = [&] {
    num::Graph e(false);
    return e.value(build(e)).item();
  };
  const num::GradientMap numeric = num::finite_difference_grad(loss, params, eps);
  GradCheck r;
  r.name = name;
  r.params = scalars;
  r.max_rel_error = num::max_relative_error(analytic, numeric);
  r.pass = r.max_rel_error < tol;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ModelConfig tiny() {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = 9;
  c.d_model = 4;
  c.n_heads = 2;
  c.d_ffn = 6;
  c.layers = 1;
  c.dropout = 0.0;
  c.max_len = 12;
  return c;
}

}  // namespace

std::vector<GradCheck> run_gradient_suite(std::uint64_t seed, double eps, double tol) {
  std::vector<GradCheck> out;
  const std::vector<SentencePair> batch{{{6, 7, 8, 6, 7}, {7, 8, 6, 7}}, {{8, 6, 6, 7}, {6, 8, 7, 8, 6}}};
  const std::vector<TokenSequence> mono{{6, 7, 8, 6, 7, 8}, {8, 8, 7, 6, 6}};

  Model base(transformer_genotype(1), tiny(), seed);
  out.push_back(check("baseline NLL", {&base.params()}, [&](num::Graph& g) { return batch_nll(g, base, batch); }, eps,
                      tol));

  out.push_back(check("MASS unsupervised", {&base.params()}, [&](num::Graph& g) {
    num::Rng rng(seed, 11);
    return mass::unsup_loss(g, base, mono, rng);
  }, eps, tol));

  out.push_back(check("MASS supervised (6 terms)", {&base.params()}, [&](num::Graph& g) {
    num::Rng rng(seed, 12);
    return mass::sup_loss(g, base, batch, rng);
  }, eps, tol));

  {
    Model f0(transformer_genotype(1), tiny(), seed + 1), f1(transformer_genotype(1), tiny(), seed + 2);
    Model g0(transformer_genotype(1), tiny(), seed + 3), g1(transformer_genotype(1), tiny(), seed + 4);
    const auto fe = madl::AgentEnsemble{{&f0, &f1}, {0.6, 0.4}};
    const auto ge = madl::AgentEnsemble{{&g0, &g1}, {0.5, 0.5}};
    const std::vector<SentencePair> xfy{{{7, 6}, {6, 7, 8}}}, ygx{{{8, 8}, {7, 6}}};
    out.push_back(check("MADL objective", {&f0.params(), &g0.params()}, [&](num::Graph& g) {
      return madl::loss_terms(g, fe, ge, batch, xfy, ygx).total;
    }, eps, tol));
  }

  {
    sca::LmConfig lc;
    lc.vocab = 9;
    lc.d_model = 4;
    lc.n_heads = 2;
    lc.d_ffn = 6;
    const sca::CausalLM lm(lc, seed);
    num::Rng rng(seed, 13);
    const SoftInputs soft = sca::augment_source(lm, batch[0].src, {.gamma = 0.6}, rng);
    const ForwardOptions opt{.soft = &soft};
    out.push_back(check("SCA-augmented NLL", {&base.params()}, [&](num::Graph& g) {
      return base.sequence_nll(g, batch[0].src, batch[0].tgt, true, opt);
    }, eps, tol));
  }

  {
    nao::SurrogateConfig sc;
    sc.layers = 1;
    sc.d_arch = 4;
    sc.d_hidden = 4;
    nao::Surrogate s(sc, seed);
    num::Rng rng(seed, 14);
    std::vector<nao::ArchSequence> archs;
    for (int i = 0; i < 3; ++i) archs.push_back(nao::encode_genotype(random_genotype(1, rng)));
    out.push_back(check("NAO predictor", {&s.params()}, [&](num::Graph& g) {
      return num::sum(g, s.predict_graph(g, s.encode_graph(g, archs)));
    }, eps, tol));
    // Gradient with respect to the embedding itself, as used by ascent.
    const auto t0 = std::chrono::steady_clock::now();
    const auto e = s.encode(archs[0]);
    const auto grad = s.predict_grad(e);
    double worst = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      auto hi = e, lo = e;
      hi[i] += eps;
      lo[i] -= eps;
      const double fd = (s.predict(hi) - s.predict(lo)) / (2 * eps);
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6}));
    }
    out.push_back({"NAO predictor d/de", e.size(), worst,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), worst < tol});
  }
  return out;
}

std::string gradient_table(const std::vector<GradCheck>& checks) {
  std::string out = "check\tparams\tmax_rel_error\tseconds\tresult\n";
  for (const auto& c : checks) {
    out += fmt::format("{}\t{}\t{:.3e}\t{:.2f}\t{}\n", c.name, c.params, c.max_rel_error, c.seconds,
                       c.pass ? "PASS" : "FAIL");
  }
  return out;
}

}  // namespace nmt::app
