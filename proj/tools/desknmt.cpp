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

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "nmt/app/artifacts.h"
#include "nmt/app/config.h"
#include "nmt/app/gradsuite.h"
#include "nmt/app/runner.h"
#include "nmt/eval/bleu.h"
#include "nmt/eval/rerank.h"
#include "nmt/madl/madl.h"
#include "nmt/pipeline/filter.h"
#include "nmt/pipeline/stages.h"
#include "nmt/pipeline/text.h"

using namespace nmt;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output directory (relative paths land under $NMT_OUTPUT_ROOT)");
}

fs::path out_dir(const Common& c, const std::string& fallback) {
  const fs::path p = c.out.empty() ? fs::path(fallback) : fs::path(c.out);
  const fs::path dir = p.is_absolute() ? p : app::output_root() / p;
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::vector<std::string> require_lines(const std::string& path) {
  if (!fs::exists(path)) throw Error("missing file " + path);
  return pipeline::read_lines(path);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error("bad number '" + item + "' in list '" + s + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desknmt: desk-scale neural machine translation toolkit"};
  app.require_subcommand(1);

  // run
  Common run_c;
  std::string run_config;
  bool print_schema = false;
  auto* run = app.add_subcommand("run", "run the stages of an experiment config");
  add_common(run, run_c);
  run->add_option("--config", run_config, "experiment config (.ini)");
  run->add_flag("--schema", print_schema, "print the config schema as markdown and exit");
  bool run_seed_given = false;
  run->callback([&] { run_seed_given = run->count("--seed") > 0; });

  // eval
  Common eval_c;
  std::string eval_model, eval_src, eval_ref, eval_hyp;
  std::size_t eval_beam = 5;
  double eval_lp = 1.0;
  auto* evalc = app.add_subcommand("eval", "decode a source file (or take hypotheses) and report corpus BLEU");
  add_common(evalc, eval_c);
  evalc->add_option("--model", eval_model, "model checkpoint");
  evalc->add_option("--src", eval_src, "source file (with --model)");
  evalc->add_option("--hyp", eval_hyp, "hypothesis file (instead of --model)");
  evalc->add_option("--ref", eval_ref, "reference file")->required();
  evalc->add_option("--beam", eval_beam, "beam size")->capture_default_str();
  evalc->add_option("--lp", eval_lp, "length penalty")->capture_default_str();

  // search
  Common search_c;
  std::string search_config;
  auto* search = app.add_subcommand("search", "architecture search on the configured task (resumable)");
  add_common(search, search_c);
  search->add_option("--config", search_config, "experiment config (.ini)")->required();

  // bpe-learn
  Common bl_c;
  std::vector<std::string> bl_inputs;
  std::size_t bl_merges = 8000;
  auto* bpe_learn = app.add_subcommand("bpe-learn", "learn a joint BPE model");
  add_common(bpe_learn, bl_c);
  bpe_learn->add_option("--input", bl_inputs, "training text files")->required();
  bpe_learn->add_option("--merges", bl_merges, "merge operations")->capture_default_str();

  // bpe-apply
  Common ba_c;
  std::string ba_model, ba_input;
  auto* bpe_apply = app.add_subcommand("bpe-apply", "segment a text file with a BPE model");
  add_common(bpe_apply, ba_c);
  bpe_apply->add_option("--model", ba_model, "BPE model file")->required();
  bpe_apply->add_option("--input", ba_input, "text file")->required();

  // filter
  Common f_c;
  std::string f_src, f_tgt, f_align, f_english = "source";
  pipeline::FilterRules rules;
  bool f_no_lower = false, f_no_dedupe = false, f_no_printable = false;
  auto* filter = app.add_subcommand("filter", "rule-based parallel corpus filtering");
  add_common(filter, f_c);
  filter->add_option("--src", f_src, "source file")->required();
  filter->add_option("--tgt", f_tgt, "target file")->required();
  filter->add_option("--align", f_align, "per-line alignment scores (enables the alignment rule)");
  filter->add_option("--min-tokens", rules.min_tokens)->capture_default_str();
  filter->add_option("--max-tokens", rules.max_tokens)->capture_default_str();
  filter->add_option("--max-ratio", rules.max_ratio)->capture_default_str();
  filter->add_option("--prefix", rules.prefixes, "drop pairs starting with these words")->capture_default_str();
  filter->add_option("--english", f_english, "side that must contain a lowercase letter: source | target | none")
      ->capture_default_str();
  filter->add_option("--align-threshold", rules.align_threshold)->capture_default_str();
  filter->add_flag("--no-lowercase", f_no_lower);
  filter->add_flag("--no-dedupe", f_no_dedupe);
  filter->add_flag("--no-printable", f_no_printable);

  // backtranslate
  Common bt_c;
  std::string bt_model, bt_input;
  std::size_t bt_beam = 5;
  pipeline::NoiseConfig bt_noise;
  auto* btc = app.add_subcommand("backtranslate", "noised back-translation of target-side monolingual text");
  add_common(btc, bt_c);
  btc->add_option("--model", bt_model, "reverse-direction model checkpoint")->required();
  btc->add_option("--input", bt_input, "target-language text")->required();
  btc->add_option("--beam", bt_beam)->capture_default_str();
  btc->add_option("--p-drop", bt_noise.p_drop)->capture_default_str();
  btc->add_option("--p-blank", bt_noise.p_blank)->capture_default_str();
  btc->add_option("--swap-window", bt_noise.swap_window)->capture_default_str();

  // distill
  Common kd_c;
  std::vector<std::string> kd_models;
  std::vector<double> kd_weights;
  std::string kd_input;
  std::size_t kd_beam = 5;
  auto* kd = app.add_subcommand("distill", "sequence-level distillation with one model or an ensemble");
  add_common(kd, kd_c);
  kd->add_option("--model", kd_models, "teacher checkpoints (repeat for an ensemble)")->required();
  kd->add_option("--weight", kd_weights, "ensemble weights (default equal)");
  kd->add_option("--input", kd_input, "source text")->required();
  kd->add_option("--beam", kd_beam)->capture_default_str();

  // rerank
  Common rr_c;
  std::string rr_nbest, rr_weights, rr_ref, rr_model, rr_grid = "0,0.5,1", rr_lgrid = "0,0.5,1";
  double rr_length = 0.0;
  bool rr_tune = false;
  auto* rr = app.add_subcommand("rerank", "rerank an n-best file with fixed or tuned weights");
  add_common(rr, rr_c);
  rr->add_option("--nbest", rr_nbest, "n-best TSV")->required();
  rr->add_option("--weights", rr_weights, "comma-separated scorer weights");
  rr->add_option("--length-weight", rr_length)->capture_default_str();
  rr->add_flag("--tune", rr_tune, "grid-search weights against --ref");
  rr->add_option("--ref", rr_ref, "references (text with --model, token ids otherwise)");
  rr->add_option("--model", rr_model, "checkpoint whose vocabulary maps text to ids");
  rr->add_option("--grid", rr_grid, "weight values per scorer")->capture_default_str();
  rr->add_option("--length-grid", rr_lgrid, "length weight values")->capture_default_str();

  // grad-check
  Common gc_c;
  auto* gc = app.add_subcommand("grad-check", "analytic vs finite-difference gradients of every loss");
  add_common(gc, gc_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string stage = "setup";
  try {
    if (run->parsed()) {
      if (print_schema) {
        std::cout << app::schema_markdown();
        return 0;
      }
      if (run_config.empty()) throw CLI::RequiredError("--config");
      stage = "config";
      app::ExperimentConfig cfg = app::load_experiment(run_config);
      if (run_seed_given) cfg.run.seed = run_c.seed;
      const fs::path dir = out_dir(run_c, cfg.run.output.empty() ? cfg.run.name : cfg.run.output);
      const auto res = app::run_experiment(cfg, dir);
      std::cout << app::scores_markdown(cfg.run.name, res.rows);
      std::cout << "outputs: " << dir.string() << "\n";
    } else if (evalc->parsed()) {
      stage = "eval";
      const fs::path dir = out_dir(eval_c, "eval");
      const auto refs = require_lines(eval_ref);
      std::vector<std::string> hyps;
      if (!eval_hyp.empty()) {
        hyps = require_lines(eval_hyp);
      } else {
        if (eval_model.empty() || eval_src.empty()) throw Error("give --hyp, or --model with --src");
        const auto bundle = app::load_bundle(eval_model);
        const auto src = app::encode_lines(require_lines(eval_src), bundle.vocab, bundle.bpe);
        const BeamConfig beam{.beam = eval_beam, .length_penalty = eval_lp};
        for (const auto& h : translate_all(bundle.model, src, beam)) {
          hyps.push_back(app::decode_ids(h, bundle.vocab, bundle.bpe));
        }
        write_text(dir / "hyp.txt", join_lines(hyps));
      }
      if (hyps.empty()) throw Error("hypothesis file is empty");
      if (hyps.size() != refs.size()) {
        throw Error(fmt::format("{} hypotheses but {} references", hyps.size(), refs.size()));
      }
      std::vector<std::string> nh, nr;
      for (const auto& h : hyps) nh.push_back(pipeline::normalize_line(h));
      for (const auto& r : refs) nr.push_back(pipeline::normalize_line(r));
      const double bleu = eval::corpus_bleu(nh, nr);
      write_text(dir / "bleu.tsv", fmt::format("sentences\tbleu\n{}\t{:.2f}\n", hyps.size(), bleu));
      write_text(dir / "bleu.md", fmt::format("| Sentences | BLEU |\n|---:|---:|\n| {} | {:.2f} |\n", hyps.size(), bleu));
      std::cout << fmt::format("BLEU = {:.2f}\n", bleu);
    } else if (search->parsed()) {
      stage = "config";
      app::ExperimentConfig cfg = app::load_experiment(search_config);
      if (search->count("--seed")) cfg.run.seed = search_c.seed;
      cfg.run.stages = {"search"};
      cfg.nao.train_searched = false;
      const fs::path dir = out_dir(search_c, (cfg.run.output.empty() ? cfg.run.name : cfg.run.output) + "-search");
      app::run_experiment(cfg, dir);
      std::ifstream best(dir / "best_genotype.txt");
      std::string g;
      std::getline(best, g);
      validate(genotype_from_text(g));
      std::cout << "best genotype: " << g << "\narchive: " << (dir / "nao_archive.tsv").string() << "\n";
    } else if (bpe_learn->parsed()) {
      stage = "bpe-learn";
      std::vector<std::vector<std::string>> corpora;
      for (const auto& f : bl_inputs) {
        std::vector<std::string> norm;
        for (const auto& l : require_lines(f)) norm.push_back(pipeline::normalize_line(l));
        corpora.push_back(std::move(norm));
      }
      const auto model = pipeline::learn_bpe(corpora, bl_merges);
      const fs::path dir = out_dir(bl_c, "bpe");
      write_text(dir / "bpe.model", model.to_text());
      std::cout << fmt::format("{} merges, {} symbols -> {}\n", model.merges().size(), model.vocabulary().size(),
                               (dir / "bpe.model").string());
    } else if (bpe_apply->parsed()) {
      stage = "bpe-apply";
      std::ifstream in(ba_model);
      if (!in) throw Error("missing file " + ba_model);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto model = pipeline::BpeModel::from_text(ss.str());
      std::vector<std::string> out;
      for (const auto& l : require_lines(ba_input)) {
        const auto seg = model.segment(pipeline::normalize_line(l));
        out.push_back(fmt::format("{}", fmt::join(seg, " ")));
      }
      const fs::path dir = out_dir(ba_c, "bpe");
      const fs::path target = dir / (fs::path(ba_input).filename().string() + ".bpe");
      write_text(target, join_lines(out));
      std::cout << target.string() << "\n";
    } else if (filter->parsed()) {
      stage = "filter";
      const auto src = require_lines(f_src), tgt = require_lines(f_tgt);
      if (src.size() != tgt.size()) throw Error("source and target line counts differ");
      std::vector<pipeline::RawPair> corpus;
      for (std::size_t i = 0; i < src.size(); ++i) corpus.push_back({src[i], tgt[i], std::nullopt});
      if (!f_align.empty()) {
        const auto scores = require_lines(f_align);
        if (scores.size() != src.size()) throw Error("alignment score count differs from the corpus");
        for (std::size_t i = 0; i < scores.size(); ++i) corpus[i].align_score = std::stod(scores[i]);
        rules.alignment = true;
      }
      if (f_english == "source") {
        rules.english = pipeline::EnglishSide::source;
      } else if (f_english == "target") {
        rules.english = pipeline::EnglishSide::target;
      } else if (f_english == "none") {
        rules.english = pipeline::EnglishSide::none;
      } else {
        throw CLI::ValidationError("--english", "must be source, target or none");
      }
      rules.require_lowercase = !f_no_lower;
      rules.dedupe = !f_no_dedupe;
      rules.printable = !f_no_printable;
      const auto res = pipeline::filter_corpus(corpus, rules);
      const fs::path dir = out_dir(f_c, "filter");
      std::vector<std::string> ks, kt;
      for (const auto& p : res.kept) ks.push_back(p.src), kt.push_back(p.tgt);
      write_text(dir / "filtered.src", join_lines(ks));
      write_text(dir / "filtered.tgt", join_lines(kt));
      std::ofstream log(dir / "dropped.tsv");
      pipeline::write_drop_log(log, res.dropped);
      std::map<std::string, std::size_t> by_rule;
      for (const auto& d : res.dropped) ++by_rule[d.rule];
      std::cout << fmt::format("kept {} of {}\n", res.kept.size(), corpus.size());
      for (const auto& [r, n] : by_rule) std::cout << fmt::format("  {}\t{}\n", r, n);
    } else if (btc->parsed()) {
      stage = "backtranslate";
      const auto bundle = app::load_bundle(bt_model);
      const auto mono = app::encode_lines(require_lines(bt_input), bundle.vocab, bundle.bpe);
      num::Rng rng(bt_c.seed, 0xb7);
      const auto pairs = pipeline::back_translate(bundle.model, mono, {.beam = bt_beam}, bt_noise, rng);
      std::vector<std::string> s, t;
      for (const auto& p : pairs) {
        s.push_back(app::decode_ids(p.pair.src, bundle.vocab, bundle.bpe));
        t.push_back(app::decode_ids(p.pair.tgt, bundle.vocab, bundle.bpe));
      }
      const fs::path dir = out_dir(bt_c, "backtranslate");
      write_text(dir / "bt.src", join_lines(s));
      write_text(dir / "bt.tgt", join_lines(t));
      std::cout << fmt::format("{} synthetic pairs -> {}\n", pairs.size(), dir.string());
    } else if (kd->parsed()) {
      stage = "distill";
      std::vector<app::ModelBundle> bundles;
      for (const auto& m : kd_models) bundles.push_back(app::load_bundle(m));
      for (const auto& b : bundles) {
        if (!(b.vocab == bundles.front().vocab)) throw Error("teachers use different vocabularies");
      }
      std::vector<Model*> ms;
      for (auto& b : bundles) ms.push_back(&b.model);
      madl::AgentEnsemble ens = kd_weights.empty() ? madl::equal_weights(ms) : madl::AgentEnsemble{ms, kd_weights};
      ens.validate();
      const auto& front = bundles.front();
      const auto src = app::encode_lines(require_lines(kd_input), front.vocab, front.bpe);
      const auto pairs = pipeline::distill(ens, src, {.beam = kd_beam});
      std::vector<std::string> s, t;
      for (const auto& p : pairs) {
        s.push_back(app::decode_ids(p.pair.src, front.vocab, front.bpe));
        t.push_back(app::decode_ids(p.pair.tgt, front.vocab, front.bpe));
      }
      const fs::path dir = out_dir(kd_c, "distill");
      write_text(dir / "kd.src", join_lines(s));
      write_text(dir / "kd.tgt", join_lines(t));
      std::cout << fmt::format("{} distilled pairs -> {}\n", pairs.size(), dir.string());
    } else if (rr->parsed()) {
      stage = "rerank";
      std::ifstream in(rr_nbest);
      if (!in) throw Error("missing file " + rr_nbest);
      const auto nbest = eval::read_nbest(in);
      std::optional<app::ModelBundle> bundle;
      if (!rr_model.empty()) bundle = app::load_bundle(rr_model);
      eval::RerankConfig rc{parse_list(rr_weights), rr_length};
      if (rr_tune) {
        if (rr_ref.empty()) throw Error("--tune needs --ref");
        std::vector<TokenSequence> refs;
        if (bundle) {
          refs = app::encode_lines(require_lines(rr_ref), bundle->vocab, bundle->bpe);
        } else {
          for (const auto& l : require_lines(rr_ref)) {
            TokenSequence ids;
            std::istringstream ls(l);
            int t;
            while (ls >> t) ids.push_back(t);
            refs.push_back(ids);
          }
        }
        const std::size_t k = nbest.empty() || nbest[0].empty() ? 0 : nbest[0][0].scores.size();
        rc = eval::tune_rerank(nbest, refs, eval::weight_grid(k, parse_list(rr_grid)), parse_list(rr_lgrid));
      } else if (rc.weights.empty()) {
        throw Error("give --weights or --tune");
      }
      std::vector<std::string> out;
      for (const auto& ids : eval::rerank_tokens(nbest, rc)) {
        out.push_back(bundle ? app::decode_ids(ids, bundle->vocab, bundle->bpe) : fmt::format("{}", fmt::join(ids, " ")));
      }
      const fs::path dir = out_dir(rr_c, "rerank");
      write_text(dir / "reranked.txt", join_lines(out));
      write_text(dir / "weights.txt",
                 fmt::format("weights = {}\nlength_weight = {}\n", fmt::join(rc.weights, ", "), rc.length_weight));
      std::cout << fmt::format("weights {} length {} -> {}\n", fmt::join(rc.weights, ","), rc.length_weight,
                               dir.string());
    } else if (gc->parsed()) {
      stage = "grad-check";
      const auto checks = app::run_gradient_suite(gc_c.seed);
      const std::string table = app::gradient_table(checks);
      write_text(out_dir(gc_c, "grad-check") / "gradcheck.tsv", table);
      std::cout << table;
      for (const auto& c : checks) {
        if (!c.pass) return 1;
      }
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const app::SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const app::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error in stage " << stage << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
