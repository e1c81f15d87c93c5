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

#include "nmt/pipeline/stages.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>

#include "nmt/eval/bleu.h"

namespace nmt::pipeline {

Model new_model(const TrainSpec& spec, std::uint64_t seed) {
  return Model(spec.genotype.value_or(transformer_genotype(spec.model.layers)), spec.model, seed);
}

double train_epochs(Model& model, num::Adam& adam, const std::vector<SentencePair>& data, std::size_t epochs,
                    std::size_t batch_size, num::Rng& rng) {
  double loss = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) loss = train_epoch(model, adam, data, batch_size, rng);
  return loss;
}

Model train_model(const std::vector<SentencePair>& data, const TrainSpec& spec, std::uint64_t seed) {
  Model m = new_model(spec, seed);
  num::Adam adam(spec.adam);
  num::Rng rng(seed, 0x7a11);
  train_epochs(m, adam, data, spec.epochs, spec.batch_size, rng);
  return m;
}

double dev_bleu(const Model& model, const std::vector<SentencePair>& dev, const BeamConfig& beam) {
  std::vector<TokenSequence> src, ref;
  for (const auto& p : dev) src.push_back(p.src), ref.push_back(p.tgt);
  return eval::corpus_bleu(translate_all(model, src, beam), ref);
}

ParallelCorpus back_translate(const Model& reverse, const std::vector<TokenSequence>& mono, const BeamConfig& beam,
                              const NoiseConfig& noise, num::Rng& rng) {
  noise.validate();
  std::vector<std::optional<TokenSequence>> hyp(mono.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < mono.size(); ++i) {
    try {
      hyp[i] = translate(reverse, mono[i], beam);
    } catch (const std::exception& e) {
      spdlog::warn("back-translation skipped sentence {}: {}", i, e.what());
    }
  }
  ParallelCorpus out;
  for (std::size_t i = 0; i < mono.size(); ++i) {
    if (!hyp[i]) continue;
    out.push_back({{add_noise(*hyp[i], noise, rng), mono[i]}, Provenance::bt, "bt"});
  }
  return out;
}

ParallelCorpus distill(const madl::AgentEnsemble& teachers, const std::vector<TokenSequence>& sources,
                       const BeamConfig& beam) {
  const auto hyps = madl::combined_translate_all(teachers, sources, beam);
  ParallelCorpus out;
  for (std::size_t i = 0; i < sources.size(); ++i) out.push_back({{sources[i], hyps[i]}, Provenance::kd, "kd"});
  return out;
}

ParallelCorpus distill(const Model& teacher, const std::vector<TokenSequence>& sources, const BeamConfig& beam) {
  Model* m = const_cast<Model*>(&teacher);  // read-only use through the ensemble view
  return distill(madl::AgentEnsemble{{m}, {1.0}}, sources, beam);
}

BtKdResult iterate_bt_kd(const Model& fwd0, const Model& bwd0, const ParallelCorpus& bitext,
                         const std::vector<TokenSequence>& mono_x, const std::vector<TokenSequence>& mono_y,
                         const std::vector<SentencePair>& dev, const BtKdConfig& cfg, std::uint64_t seed) {
  if (cfg.rounds < 1) throw Error("BT/KD needs at least one round");
  BtKdResult res{fwd0, bwd0, {}, bitext};
  ParallelCorpus bitext_rev = bitext;
  for (auto& t : bitext_rev) std::swap(t.pair.src, t.pair.tgt);
  const std::vector<SentencePair> dev_rev = reversed_pairs(dev);
  double best_f = dev_bleu(res.fwd, dev, cfg.beam), best_b = dev_bleu(res.bwd, dev_rev, cfg.beam);

  for (std::size_t r = 1; r <= cfg.rounds; ++r) {
    num::Rng rng(seed, 0xb7d0 + r);
    std::vector<std::pair<ParallelCorpus, std::size_t>> fparts{{bitext, cfg.bitext_upsample}};
    std::vector<std::pair<ParallelCorpus, std::size_t>> bparts{{bitext_rev, cfg.bitext_upsample}};
    if (cfg.use_bt) {
      fparts.emplace_back(back_translate(res.bwd, mono_y, cfg.beam, cfg.noise, rng), cfg.bt_upsample);
      bparts.emplace_back(back_translate(res.fwd, mono_x, cfg.beam, cfg.noise, rng), cfg.bt_upsample);
    }
    if (cfg.use_kd) {
      fparts.emplace_back(distill(res.fwd, mono_x, cfg.beam), cfg.kd_upsample);
      bparts.emplace_back(distill(res.bwd, mono_y, cfg.beam), cfg.kd_upsample);
    }
    ParallelCorpus fmix = mix_corpora(fparts, rng);
    const auto fdata = pairs_of(fmix);
    const auto bdata = pairs_of(mix_corpora(bparts, rng));

    Model f = cfg.from_scratch ? new_model(cfg.train, seed + 2 * r) : res.fwd;
    Model b = cfg.from_scratch ? new_model(cfg.train, seed + 2 * r + 1) : res.bwd;
    num::Adam af(cfg.train.adam), ab(cfg.train.adam);
    train_epochs(f, af, fdata, cfg.train.epochs, cfg.train.batch_size, rng);
    train_epochs(b, ab, bdata, cfg.train.epochs, cfg.train.batch_size, rng);

    RoundRecord rec{r, dev_bleu(f, dev, cfg.beam), dev_bleu(b, dev_rev, cfg.beam), false};
    if (rec.fwd_bleu < best_f - cfg.tolerance) {
      rec.flagged = true;
      spdlog::warn("bt/kd round {}: forward dev BLEU {:.2f} below best {:.2f}; keeping previous model", r,
                   rec.fwd_bleu, best_f);
    } else {
      res.fwd = std::move(f);
      res.fwd_corpus = std::move(fmix);
      best_f = std::max(best_f, rec.fwd_bleu);
    }
    if (rec.bwd_bleu < best_b - cfg.tolerance) {
      rec.flagged = true;
    } else {
      res.bwd = std::move(b);
      best_b = std::max(best_b, rec.bwd_bleu);
    }
    res.archive.push_back(rec);
  }
  return res;
}

std::size_t finetune_clean_subset(Model& model, const ParallelCorpus& full, const std::set<std::string>& clean_origins,
                                  std::size_t batch_size, const num::AdamConfig& adam, num::Rng& rng) {
  std::vector<SentencePair> clean;
  for (const auto& t : full) {
    if (clean_origins.count(t.origin)) clean.push_back(t.pair);
  }
  if (clean.empty()) throw Error("clean subset is empty");
  num::Adam opt(adam);
  train_epoch(model, opt, clean, batch_size, rng);
  return 1;
}

ParallelCorpus build_speculation_set(const std::vector<const Model*>& models,
                                     const std::vector<TokenSequence>& test_sources,
                                     const std::vector<SentencePair>& b1, const BeamConfig& beam, num::Rng& rng) {
  if (models.empty() || test_sources.empty()) throw Error("speculation needs at least one model and one source");
  ParallelCorpus out;
  for (const Model* m : models) {
    const auto hyps = translate_all(*m, test_sources, beam);
    for (std::size_t i = 0; i < test_sources.size(); ++i) {
      out.push_back({{test_sources[i], hyps[i]}, Provenance::speculation, "speculation"});
    }
  }
  const std::size_t want = models.size() * test_sources.size();
  if (b1.empty()) throw Error("speculation needs bitext to sample from");
  if (b1.size() >= want) {
    std::vector<std::size_t> idx(b1.size());
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (std::size_t i = 0; i < want; ++i) out.push_back({b1[idx[i]], Provenance::speculation, "bitext"});
  } else {
    for (std::size_t i = 0; i < want; ++i) out.push_back({b1[rng.index(b1.size())], Provenance::speculation, "bitext"});
  }
  return out;
}

EarlyStopResult finetune_early_stop(Model& model, const std::vector<SentencePair>& data,
                                    const std::vector<SentencePair>& dev, std::size_t max_epochs,
                                    std::size_t batch_size, const num::AdamConfig& adam, const BeamConfig& beam,
                                    num::Rng& rng) {
  EarlyStopResult res;
  res.dev_bleu.push_back(dev_bleu(model, dev, beam));
  num::ParamStore best = model.params();
  double best_bleu = res.dev_bleu.front();
  num::Adam opt(adam);
  for (std::size_t e = 1; e <= max_epochs; ++e) {
    train_epoch(model, opt, data, batch_size, rng);
    ++res.epochs_run;
    const double b = dev_bleu(model, dev, beam);
    const bool dropped = b < res.dev_bleu.back();
    res.dev_bleu.push_back(b);
    if (b > best_bleu) {
      best_bleu = b;
      best = model.params();
      res.best_epoch = e;
    }
    if (dropped) break;
  }
  model.params().assign_values(best);
  return res;
}

}  // namespace nmt::pipeline
