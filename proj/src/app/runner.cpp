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

#include "nmt/app/runner.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "nmt/app/artifacts.h"
#include "nmt/eval/rerank.h"
#include "nmt/madl/madl.h"
#include "nmt/mass/mass.h"
#include "nmt/nao/search.h"
#include "nmt/pipeline/stages.h"
#include "nmt/pipeline/synthetic.h"
#include "nmt/pipeline/text.h"
#include "nmt/sca/sca.h"

namespace nmt::app {

namespace fs = std::filesystem;
using pipeline::ParallelCorpus;
using pipeline::Provenance;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::uint64_t derive(std::uint64_t seed, std::string_view what) { return num::Rng(seed, fnv1a(what)).next_u64(); }

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

std::vector<TokenSequence> sources(const std::vector<SentencePair>& pairs) {
  std::vector<TokenSequence> out;
  for (const auto& p : pairs) out.push_back(p.src);
  return out;
}

std::vector<TokenSequence> targets(const std::vector<SentencePair>& pairs) {
  std::vector<TokenSequence> out;
  for (const auto& p : pairs) out.push_back(p.tgt);
  return out;
}

std::vector<SentencePair> reverse_targets(const std::vector<SentencePair>& pairs) {
  std::vector<SentencePair> out = pairs;
  for (auto& p : out) std::reverse(p.tgt.begin(), p.tgt.end());
  return out;
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, fs::path dir)
      : cfg_(cfg), dir_(std::move(dir)), seed_(cfg.run.seed), data_(load_task(cfg, derive(seed_, "task"))) {
    spec_.model.src_vocab = spec_.model.tgt_vocab = data_.vocab.size();
    spec_.model.d_model = cfg.model.d_model;
    spec_.model.n_heads = cfg.model.n_heads;
    spec_.model.d_ffn = cfg.model.d_ffn;
    spec_.model.layers = cfg.model.layers;
    spec_.model.dropout = cfg.model.dropout;
    spec_.model.max_len = cfg.model.max_len;
    spec_.model.tied_output = cfg.model.tied_output;
    spec_.model.shared_embeddings = cfg.model.shared_embeddings;
    if (cfg.model.genotype != "transformer") spec_.genotype = genotype_from_text(cfg.model.genotype);
    spec_.epochs = cfg.train.epochs;
    spec_.batch_size = cfg.train.batch_size;
    spec_.adam.lr = cfg.train.lr;
    spec_.adam.clip_norm = cfg.train.clip_norm;
    beam_ = {.beam = cfg.decode.beam, .length_penalty = cfg.decode.length_penalty, .max_len = cfg.decode.max_len};
    corpus_ = pipeline::tag_pairs(data_.bitext, Provenance::bitext, "bitext");
    const auto noisy = pipeline::tag_pairs(data_.noisy, Provenance::bitext, "noisy");
    corpus_.insert(corpus_.end(), noisy.begin(), noisy.end());
  }

  std::vector<ScoreRow> run() {
    fs::create_directories(dir_);
    write_file(dir_ / "config.ini", to_text(cfg_));
    write_file(dir_ / "vocab.txt", data_.vocab.to_text());
    if (data_.bpe) write_file(dir_ / "bpe.model", data_.bpe->to_text());
    write_corpora();
    for (const auto& stage : cfg_.run.stages) {
      spdlog::info("stage {}", stage);
      try {
        run_stage(stage);
      } catch (const StageError&) {
        throw;
      } catch (const std::exception& e) {
        throw StageError(stage, e.what());
      }
      write_file(dir_ / "scores.tsv", scores_tsv(rows_));
      write_file(dir_ / "scores.md", scores_markdown(cfg_.run.name, rows_));
    }
    return rows_;
  }

 private:
  std::vector<SentencePair> train_pairs() const { return pipeline::pairs_of(corpus_); }

  double bleu(const std::vector<TokenSequence>& hyps, const std::vector<SentencePair>& ref) const {
    return word_bleu(hyps, targets(ref), data_.bpe);
  }

  void score(const std::string& stage, const std::string& system, const Model& m) {
    score_hyps(stage, system, translate_all(m, sources(data_.dev), beam_),
               data_.test.empty() ? std::vector<TokenSequence>{} : translate_all(m, sources(data_.test), beam_));
  }

  void score_hyps(const std::string& stage, const std::string& system, const std::vector<TokenSequence>& dev,
                  const std::vector<TokenSequence>& test) {
    ScoreRow r{stage, system, bleu(dev, data_.dev), data_.test.empty() ? 0.0 : bleu(test, data_.test)};
    spdlog::info("{}: dev {:.2f} test {:.2f}", system, r.dev_bleu, r.test_bleu);
    rows_.push_back(r);
  }

  void save(const std::string& name, const Model& m) {
    save_bundle(dir_ / "checkpoints" / (name + ".ckpt"), m, data_.vocab, data_.bpe);
  }

  Model& need_fwd(const std::string& stage) {
    if (!fwd_) throw StageError(stage, "needs a forward model; run the baseline stage first");
    return *fwd_;
  }

  void need_pair(const std::string& stage) {
    need_fwd(stage);
    if (!bwd_) throw StageError(stage, "needs a reverse model; run the baseline stage first");
  }

  void need_mono(const std::string& stage) {
    if (data_.mono_x.empty() && data_.mono_y.empty()) throw StageError(stage, "needs monolingual data (task.n_mono)");
  }

  // Extra forward (and reverse) models with their own seeds.
  void ensure_extra(std::size_t n, bool reverse_too) {
    while (extra_fwd_.size() < n) {
      const std::size_t i = extra_fwd_.size();
      extra_fwd_.push_back(pipeline::train_model(train_pairs(), spec_, derive(seed_, fmt::format("extra.fwd.{}", i))));
    }
    while (reverse_too && extra_bwd_.size() < n) {
      const std::size_t i = extra_bwd_.size();
      extra_bwd_.push_back(pipeline::train_model(reversed_pairs(train_pairs()), spec_,
                                                 derive(seed_, fmt::format("extra.bwd.{}", i))));
    }
  }

  void write_corpora() {
    auto dump = [&](const std::string& name, const std::vector<SentencePair>& pairs) {
      std::string s, t;
      for (const auto& p : pairs) {
        s += decode_ids(p.src, data_.vocab, data_.bpe) + "\n";
        t += decode_ids(p.tgt, data_.vocab, data_.bpe) + "\n";
      }
      write_file(dir_ / "corpora" / (name + ".src"), s);
      write_file(dir_ / "corpora" / (name + ".tgt"), t);
    };
    dump("train", train_pairs());
    dump("dev", data_.dev);
    dump("test", data_.test);
    auto mono = [&](const std::string& name, const std::vector<TokenSequence>& lines) {
      if (lines.empty()) return;
      std::string s;
      for (const auto& l : lines) s += decode_ids(l, data_.vocab, data_.bpe) + "\n";
      write_file(dir_ / "corpora" / name, s);
    };
    mono("mono.src", data_.mono_x);
    mono("mono.tgt", data_.mono_y);
  }

  void run_stage(const std::string& stage) {
    num::Rng rng(derive(seed_, stage), 0);
    if (stage == "baseline") {
      fwd_ = pipeline::train_model(train_pairs(), spec_, derive(seed_, "baseline.fwd"));
      bwd_ = pipeline::train_model(reversed_pairs(train_pairs()), spec_, derive(seed_, "baseline.bwd"));
      save("baseline.fwd", *fwd_);
      save("baseline.bwd", *bwd_);
      score(stage, "Baseline", *fwd_);
    } else if (stage == "mass") {
      need_mono(stage);
      Model m = pipeline::new_model(spec_, derive(seed_, "baseline.fwd"));
      num::Adam pre({.lr = cfg_.mass.lr, .clip_norm = cfg_.train.clip_norm});
      mass::pretrain(m, pre, data_.mono_x, data_.mono_y, cfg_.mass.steps, cfg_.mass.batch_size, rng,
                     {.ratio = cfg_.mass.ratio});
      num::Adam adam(spec_.adam);
      pipeline::train_epochs(m, adam, train_pairs(), spec_.epochs, spec_.batch_size, rng);
      fwd_ = std::move(m);
      save("mass.fwd", *fwd_);
      score(stage, "+MASS", *fwd_);
    } else if (stage == "bt") {
      need_pair(stage);
      need_mono(stage);
      pipeline::BtKdConfig bc;
      bc.rounds = cfg_.bt.rounds;
      bc.use_kd = cfg_.bt.use_kd;
      bc.bitext_upsample = cfg_.bt.bitext_upsample;
      bc.bt_upsample = cfg_.bt.bt_upsample;
      bc.kd_upsample = cfg_.bt.kd_upsample;
      bc.from_scratch = cfg_.bt.from_scratch;
      bc.beam = beam_;
      bc.noise = {cfg_.bt.p_drop, cfg_.bt.p_blank, cfg_.bt.swap_window, special::kUnk};
      bc.train = spec_;
      bc.tolerance = cfg_.bt.tolerance;
      auto res = pipeline::iterate_bt_kd(*fwd_, *bwd_, corpus_, data_.mono_x, data_.mono_y, data_.dev, bc,
                                         derive(seed_, "bt.rounds"));
      std::string log = "round\tfwd_dev_bleu\tbwd_dev_bleu\tflagged\n";
      for (const auto& r : res.archive) {
        log += fmt::format("{}\t{:.2f}\t{:.2f}\t{}\n", r.round, r.fwd_bleu, r.bwd_bleu, r.flagged ? "yes" : "no");
      }
      write_file(dir_ / "bt_rounds.tsv", log);
      fwd_ = std::move(res.fwd);
      bwd_ = std::move(res.bwd);
      corpus_ = std::move(res.fwd_corpus);
      save("bt.fwd", *fwd_);
      save("bt.bwd", *bwd_);
      score(stage, cfg_.bt.use_kd ? "+BT+KD" : "+BT", *fwd_);
    } else if (stage == "madl") {
      need_pair(stage);
      need_mono(stage);
      ensure_extra(cfg_.madl.agents, true);
      std::vector<Model*> fs{&*fwd_}, gs{&*bwd_};
      for (std::size_t i = 0; i < cfg_.madl.agents; ++i) fs.push_back(&extra_fwd_[i]), gs.push_back(&extra_bwd_[i]);
      madl::TrainConfig tc;
      tc.epochs = cfg_.madl.epochs;
      tc.batch_size = tc.mono_batch_size = spec_.batch_size;
      tc.mono_fraction = cfg_.madl.mono_fraction;
      tc.refresh_every_n_epochs = cfg_.madl.refresh_every;
      tc.adam = {.lr = cfg_.madl.lr, .clip_norm = cfg_.train.clip_norm};
      madl::train(madl::equal_weights(fs), madl::equal_weights(gs), {train_pairs(), data_.mono_x, data_.mono_y}, tc,
                  rng);
      save("madl.fwd", *fwd_);
      save("madl.bwd", *bwd_);
      score(stage, "+MADL", *fwd_);
    } else if (stage == "sca") {
      std::vector<TokenSequence> lm_corpus = sources(train_pairs());
      lm_corpus.insert(lm_corpus.end(), data_.mono_x.begin(), data_.mono_x.end());
      sca::LmConfig lc;
      lc.vocab = data_.vocab.size();
      lc.d_model = cfg_.sca.lm_d_model;
      lc.n_heads = cfg_.sca.lm_d_model % 4 == 0 ? 4 : 1;
      lc.d_ffn = 2 * cfg_.sca.lm_d_model;
      lc.layers = cfg_.sca.lm_layers;
      lc.max_len = cfg_.model.max_len;
      const auto lm = sca::train_lm(lm_corpus, lc, {.epochs = cfg_.sca.lm_epochs, .batch_size = spec_.batch_size},
                                    derive(seed_, "sca.lm"));
      spdlog::info("sca: language model perplexity {:.2f}", sca::lm_perplexity(lm, sources(data_.dev)));
      // same initialisation, batch order and dropout stream as the baseline
      Model m = pipeline::new_model(spec_, derive(seed_, "baseline.fwd"));
      num::Adam adam(spec_.adam);
      num::Rng paired(derive(seed_, "baseline.fwd"), 0x7a11);
      for (std::size_t e = 0; e < spec_.epochs; ++e) {
        sca::train_epoch(m, adam, train_pairs(), spec_.batch_size, lm,
                         {.gamma = cfg_.sca.gamma, .temperature = cfg_.sca.temperature}, paired, &rng);
      }
      fwd_ = std::move(m);
      save("sca.fwd", *fwd_);
      score(stage, "+SCA", *fwd_);
    } else if (stage == "finetune") {
      Model& m = need_fwd(stage);
      pipeline::finetune_clean_subset(m, corpus_, {"bitext"}, cfg_.finetune.batch_size,
                                      {.lr = cfg_.finetune.lr, .clip_norm = cfg_.train.clip_norm}, rng);
      save("finetune.fwd", m);
      score(stage, "+Finetune", m);
    } else if (stage == "ensemble") {
      need_fwd(stage);
      ensure_extra(cfg_.ensemble.size - 1, false);
      std::vector<Model*> ms{&*fwd_};
      for (std::size_t i = 0; i + 1 < cfg_.ensemble.size; ++i) ms.push_back(&extra_fwd_[i]);
      const auto ens = madl::equal_weights(ms);
      score_hyps(stage, fmt::format("+Ensemble x{}", ms.size()),
                 madl::combined_translate_all(ens, sources(data_.dev), beam_),
                 data_.test.empty() ? std::vector<TokenSequence>{}
                                    : madl::combined_translate_all(ens, sources(data_.test), beam_));
    } else if (stage == "speculate") {
      Model& m = need_fwd(stage);
      if (data_.test.empty()) throw StageError(stage, "needs a test set");
      std::vector<const Model*> ms{&m};
      for (const auto& e : extra_fwd_) ms.push_back(&e);
      const auto set = pipeline::build_speculation_set(ms, sources(data_.test), data_.bitext, beam_, rng);
      const auto r = pipeline::finetune_early_stop(m, pipeline::pairs_of(set), data_.dev, cfg_.speculate.max_epochs,
                                                   spec_.batch_size, {.lr = cfg_.speculate.lr}, beam_, rng);
      std::string log = "epoch\tdev_bleu\n";
      for (std::size_t e = 0; e < r.dev_bleu.size(); ++e) log += fmt::format("{}\t{:.2f}\n", e, r.dev_bleu[e]);
      write_file(dir_ / "speculation.tsv", log);
      save("speculate.fwd", m);
      score(stage, "+Speculation", m);
    } else if (stage == "search") {
      nao::SearchConfig sc;
      sc.pool = cfg_.nao.pool;
      sc.iterations = cfg_.nao.iterations;
      sc.top_k = cfg_.nao.top_k;
      sc.eta_schedule = cfg_.nao.eta;
      sc.supernet_steps = cfg_.nao.supernet_steps;
      sc.batch_size = spec_.batch_size;
      sc.eval.budget = cfg_.nao.eval_budget;
      sc.eval.batch_size = spec_.batch_size;
      sc.surrogate.d_arch = cfg_.nao.d_arch;
      sc.surrogate.d_hidden = cfg_.nao.d_hidden;
      sc.surrogate_train.epochs = cfg_.nao.surrogate_epochs;
      const auto res = nao::nao_search(spec_.model, train_pairs(), data_.dev, sc, derive(seed_, "search"),
                                       dir_ / "nao_archive.tsv");
      const Genotype best = res.archive.front().genotype;
      write_file(dir_ / "best_genotype.txt", to_text(best) + "\n");
      std::string log = "iteration\tbest_dev_score\n";
      for (std::size_t i = 0; i < res.best_so_far.size(); ++i) log += fmt::format("{}\t{:.4f}\n", i, res.best_so_far[i]);
      write_file(dir_ / "nao_progress.tsv", log);
      if (cfg_.nao.train_searched) {
        pipeline::TrainSpec s = spec_;
        s.genotype = best;
        searched_ = pipeline::train_model(train_pairs(), s, derive(seed_, "search.model"));
        save("search.fwd", *searched_);
        score(stage, "NAO searched", *searched_);
      }
    } else if (stage == "rerank") {
      Model& l2r = need_fwd(stage);
      const Model r2l =
          pipeline::train_model(reverse_targets(train_pairs()), spec_, derive(seed_, "rerank.r2l"));
      const Model* third = nullptr;
      std::string label;
      if (cfg_.rerank.use_nao && searched_) {
        third = &*searched_;
        label = "L2R+R2L+NAO";
      } else {
        ensure_extra(1, false);
        third = &extra_fwd_[0];
        label = "L2R+R2L+L2R";
      }
      const std::vector<eval::Scorer> scorers{{&l2r, false}, {&r2l, true}, {third, false}};
      const BeamConfig nb{.beam = cfg_.rerank.beam, .length_penalty = beam_.length_penalty, .max_len = beam_.max_len};
      auto lists = [&](const std::vector<SentencePair>& set) {
        auto n = eval::from_hypotheses(nbest_all(l2r, sources(set), nb));
        eval::attach_scores(n, sources(set), scorers);
        return n;
      };
      const auto dev_n = lists(data_.dev);
      const auto rc = eval::tune_rerank(dev_n, targets(data_.dev), eval::weight_grid(3, cfg_.rerank.weight_values),
                                        cfg_.rerank.length_weights);
      std::ofstream nbf(dir_ / "dev.nbest.tsv");
      eval::write_nbest(nbf, dev_n);
      write_file(dir_ / "rerank_weights.txt",
                 fmt::format("weights = {}\nlength_weight = {}\n", fmt::join(rc.weights, ", "), rc.length_weight));
      score_hyps(stage, "+Rerank " + label, eval::rerank_tokens(dev_n, rc),
                 data_.test.empty() ? std::vector<TokenSequence>{} : eval::rerank_tokens(lists(data_.test), rc));
    } else {
      throw StageError(stage, "unknown stage");
    }
  }

  const ExperimentConfig& cfg_;
  fs::path dir_;
  std::uint64_t seed_;
  TaskCorpora data_;
  pipeline::TrainSpec spec_;
  BeamConfig beam_;
  ParallelCorpus corpus_;
  std::optional<Model> fwd_, bwd_, searched_;
  std::vector<Model> extra_fwd_, extra_bwd_;
  std::vector<ScoreRow> rows_;
};

}  // namespace

TaskCorpora load_task(const ExperimentConfig& cfg, std::uint64_t seed) {
  TaskCorpora out;
  num::Rng rng(seed, 0);
  const auto& t = cfg.task;
  if (t.kind != "files") {
    pipeline::TaskConfig tc;
    tc.kind = pipeline::parse_task(t.kind);
    tc.words = t.words;
    tc.min_len = t.min_len;
    tc.max_len = t.max_len;
    tc.zipf = t.zipf;
    tc.separate_target_words = t.separate_target_words;
    tc.successors = t.successors;
    tc.synonyms = t.synonyms;
    tc.n_bitext = t.n_bitext;
    tc.n_mono = t.n_mono;
    tc.n_dev = t.n_dev;
    tc.n_test = t.n_test;
    auto d = pipeline::make_task(tc, rng);
    out.vocab = std::move(d.vocab);
    out.bitext = std::move(d.bitext);
    out.dev = std::move(d.dev);
    out.test = std::move(d.test);
    out.mono_x = std::move(d.mono_src);
    out.mono_y = std::move(d.mono_tgt);
  } else {
    auto lines = [](const std::string& p) { return p.empty() ? std::vector<std::string>{} : pipeline::read_lines(p); };
    const auto tr_s = lines(t.train_src), tr_t = lines(t.train_tgt), mx = lines(t.mono_src), my = lines(t.mono_tgt);
    if (tr_s.size() != tr_t.size()) throw SchemaError("task.train_tgt", "line count differs from task.train_src");
    if (t.bpe_merges > 0) {
      std::vector<std::vector<std::string>> corpora;
      for (const auto* c : {&tr_s, &tr_t, &mx, &my}) {
        std::vector<std::string> norm;
        for (const auto& l : *c) norm.push_back(pipeline::normalize_line(l));
        corpora.push_back(std::move(norm));
      }
      out.bpe = pipeline::learn_bpe(corpora, t.bpe_merges);
      out.vocab = out.bpe->vocabulary();
    } else {
      std::set<std::string> words;
      for (const auto* c : {&tr_s, &tr_t, &mx, &my}) {
        for (const auto& l : *c) {
          for (const auto& w : split_whitespace(pipeline::normalize_line(l))) words.insert(w);
        }
      }
      for (const auto& w : words) out.vocab.add(w);
    }
    const std::size_t cap = cfg.model.max_len - 1;
    auto pairs = [&](const std::vector<std::string>& s, const std::vector<std::string>& tg, const char* what) {
      if (s.size() != tg.size()) throw SchemaError(std::string("task.") + what, "source and target line counts differ");
      const auto es = encode_lines(s, out.vocab, out.bpe), et = encode_lines(tg, out.vocab, out.bpe);
      std::vector<SentencePair> ps;
      std::size_t skipped = 0;
      for (std::size_t i = 0; i < es.size(); ++i) {
        if (es[i].empty() || et[i].empty() || es[i].size() > cap || et[i].size() > cap) {
          ++skipped;
          continue;
        }
        ps.push_back({es[i], et[i]});
      }
      if (skipped) spdlog::warn("{}: skipped {} empty or over-long pairs", what, skipped);
      return ps;
    };
    out.bitext = pairs(tr_s, tr_t, "train_src");
    out.dev = pairs(lines(t.dev_src), lines(t.dev_tgt), "dev_src");
    if (!t.test_src.empty()) out.test = pairs(lines(t.test_src), lines(t.test_tgt), "test_src");
    for (const auto& s : encode_lines(mx, out.vocab, out.bpe)) {
      if (!s.empty() && s.size() <= cap) out.mono_x.push_back(s);
    }
    for (const auto& s : encode_lines(my, out.vocab, out.bpe)) {
      if (!s.empty() && s.size() <= cap) out.mono_y.push_back(s);
    }
    if (out.bitext.empty()) throw SchemaError("task.train_src", "no usable training pairs");
  }
  for (std::size_t i = 0; i < t.noisy_pairs; ++i) {
    const auto& a = out.bitext[rng.index(out.bitext.size())];
    const auto& b = out.bitext[rng.index(out.bitext.size())];
    out.noisy.push_back({a.src, b.tgt});
  }
  return out;
}

std::string scores_tsv(const std::vector<ScoreRow>& rows) {
  std::string out = "stage\tsystem\tdev_bleu\ttest_bleu\n";
  for (const auto& r : rows) out += fmt::format("{}\t{}\t{:.2f}\t{:.2f}\n", r.stage, r.system, r.dev_bleu, r.test_bleu);
  return out;
}

std::string scores_markdown(const std::string& title, const std::vector<ScoreRow>& rows) {
  std::string out = fmt::format("# {}\n\n| System | Dev BLEU | Test BLEU |\n|---|---:|---:|\n", title);
  for (const auto& r : rows) out += fmt::format("| {} | {:.2f} | {:.2f} |\n", r.system, r.dev_bleu, r.test_bleu);
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  std::optional<Runner> r;
  try {
    r.emplace(cfg, dir);
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("task", e.what());
  }
  return {r->run(), dir};
}

}  // namespace nmt::app
