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
#include <map>
#include <sstream>

#include "doctest.h"
#include "nmt/pipeline/bpe.h"
#include "nmt/pipeline/corpus.h"
#include "nmt/pipeline/filter.h"
#include "nmt/pipeline/noise.h"
#include "nmt/pipeline/stages.h"
#include "nmt/pipeline/synthetic.h"
#include "nmt/pipeline/text.h"

using namespace nmt;
using namespace nmt::pipeline;

namespace {

using Merge = std::pair<std::string, std::string>;

// Applies each merge in order to the whole word.
std::vector<std::string> oracle_apply(const std::string& word, const std::vector<Merge>& merges) {
  std::vector<std::string> s = word_symbols(word);
  for (const auto& [a, b] : merges) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
        out.push_back(a + b);
        ++i;
      } else {
        out.push_back(s[i]);
      }
    }
    s = out;
  }
  return s;
}

// Learner over every word occurrence, no frequency table.
std::vector<Merge> oracle_learn(const std::vector<std::string>& lines, std::size_t n) {
  std::vector<std::vector<std::string>> occ;
  for (const auto& l : lines) {
    std::istringstream in(l);
    std::string w;
    while (in >> w) occ.push_back(word_symbols(w));
  }
  std::vector<Merge> merges;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<Merge> all;
    for (const auto& w : occ) {
      for (std::size_t i = 0; i + 1 < w.size(); ++i) all.emplace_back(w[i], w[i + 1]);
    }
    if (all.empty()) break;
    std::sort(all.begin(), all.end());
    Merge best;
    std::size_t best_n = 0;
    for (std::size_t i = 0; i < all.size();) {
      std::size_t j = i;
      while (j < all.size() && all[j] == all[i]) ++j;
      if (j - i > best_n) best_n = j - i, best = all[i];
      i = j;
    }
    merges.push_back(best);
    for (auto& w : occ) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (i + 1 < w.size() && w[i] == best.first && w[i + 1] == best.second) {
          out.push_back(best.first + best.second);
          ++i;
        } else {
          out.push_back(w[i]);
        }
      }
      w = out;
    }
  }
  return merges;
}

const std::vector<std::string> kText{"low lower lowest newer wider", "new newest widest low low", "the wide new low"};

ModelConfig tiny(std::size_t vocab) {
  ModelConfig c;
  c.src_vocab = c.tgt_vocab = vocab;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ffn = 16;
  c.layers = 1;
  c.dropout = 0.0;
  c.max_len = 16;
  return c;
}

}  // namespace

TEST_CASE("bpe learner and segmenter agree with naive versions") {
  for (std::size_t n : {0, 1, 5, 12, 40}) {
    const BpeModel m = learn_bpe({kText}, n);
    const auto ref = oracle_learn(kText, n);
    CHECK(m.merges() == ref);
    for (const auto& line : kText) {
      std::istringstream in(line);
      std::string w;
      while (in >> w) CHECK(m.segment_word(w) == oracle_apply(w, ref));
    }
  }
}

TEST_CASE("zero merges gives characters plus specials") {
  const BpeModel m = learn_bpe({{"ab ba"}}, 0);
  CHECK(m.merges().empty());
  CHECK(m.vocabulary().size() == special::kCount + 4);  // a, b, a</w>, b</w>
  CHECK(m.segment("ab") == std::vector<std::string>{"a", "b</w>"});
}

TEST_CASE("bpe encode/decode and file round trip") {
  const BpeModel m = learn_bpe({kText}, 10);
  for (const auto& line : kText) CHECK(m.decode(m.encode(line)) == line);
  const BpeModel back = BpeModel::from_text(m.to_text());
  CHECK(back.merges() == m.merges());
  CHECK(back.encode("lowest newer") == m.encode("lowest newer"));
  CHECK_THROWS(BpeModel::from_text("garbage\n"));
  // Multi-byte characters stay whole.
  CHECK(word_symbols("héé") == std::vector<std::string>{"h", "é", "é</w>"});
}

TEST_CASE("normalisation") {
  CHECK(nfkc("\xef\xac\x81") == "fi");
  CHECK(nfkc("\xef\xbc\xa1") == "A");
  CHECK(valid_utf8("caf\xc3\xa9"));
  CHECK_FALSE(valid_utf8("\xc3"));
  CHECK(has_lowercase_letter("ABc"));
  CHECK_FALSE(has_lowercase_letter("1234 \xe2\x80\x94 5678"));
  CHECK_FALSE(all_printable(std::string("a\x01")));
}

TEST_CASE("filter rules on worked examples") {
  std::string ten, thirty;
  for (int i = 0; i < 10; ++i) ten += "w ";
  for (int i = 0; i < 30; ++i) thirty += "x ";
  const std::vector<RawPair> corpus{
      {"a good line", "une bonne ligne", {}},
      {ten, thirty, {}},
      {"NGC 4594 is a galaxy", "NGC 4594 est une galaxie", {}},
      {"1234 \xe2\x80\x94 5678", "1234 \xe2\x80\x94 5678", {}},
      {"a good line", "une bonne ligne", {}},
      {"", "vide", {}},
      {"User manual", "manuel", {}},
  };
  const auto r = filter_corpus(corpus, FilterRules{});
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept_lines == std::vector<std::size_t>{1});
  std::map<std::size_t, std::string> rule;
  for (const auto& d : r.dropped) rule[d.line] = d.rule;
  CHECK(rule[2] == "ratio");
  CHECK(rule[3] == "prefix");
  CHECK(rule[4] == "lowercase");
  CHECK(rule[5] == "dedupe");
  CHECK(rule[6] == "length");
  CHECK(rule[7] == "prefix");

  const auto again = filter_corpus(r.kept, FilterRules{});
  CHECK(again.kept == r.kept);

  std::ostringstream log;
  write_drop_log(log, r.dropped);
  CHECK(log.str().find("3\tprefix\tNGC 4594") != std::string::npos);

  FilterRules align;
  align.alignment = true;
  const auto a = filter_corpus({{"ok x", "ok y", 0.01}, {"ok z", "ok w", 0.5}}, align);
  CHECK(a.kept_lines == std::vector<std::size_t>{2});
}

TEST_CASE("noise statistics") {
  num::Rng rng(5);
  SUBCASE("identity") {
    const TokenSequence s{7, 8, 9, 10};
    CHECK(add_noise(s, NoiseConfig::none(), rng) == s);
  }
  SUBCASE("local shuffle bound") {
    NoiseConfig c{0.0, 0.0, 3, special::kUnk};
    TokenSequence s(30);
    for (int i = 0; i < 30; ++i) s[i] = 100 + i;
    for (int trial = 0; trial < 200; ++trial) {
      const auto out = add_noise(s, c, rng);
      REQUIRE(out.size() == s.size());
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(std::abs(static_cast<int>(i) - (out[i] - 100)) <= 3);
    }
  }
  SUBCASE("drop and blank rates") {
    NoiseConfig c{0.1, 0.1, 0, special::kUnk};
    TokenSequence s(50, 42);
    double kept = 0, blank = 0, n = 0;
    for (int trial = 0; trial < 400; ++trial) {
      const auto out = add_noise(s, c, rng);
      kept += out.size();
      blank += static_cast<double>(std::count(out.begin(), out.end(), special::kUnk));
      n += s.size();
    }
    CHECK(kept / n == doctest::Approx(0.9).epsilon(0.03));
    CHECK(blank / kept == doctest::Approx(0.1).epsilon(0.1));
  }
  SUBCASE("never empty") {
    NoiseConfig c{1.0, 0.0, 0, special::kUnk};
    CHECK(add_noise(TokenSequence{9, 9}, c, rng).size() == 1);
  }
}

TEST_CASE("mixing and sharding") {
  num::Rng rng(3);
  std::vector<SentencePair> a(10, {{6}, {7}}), b(30, {{8}, {9}});
  const auto mixed = mix_corpora({{tag_pairs(a, Provenance::bitext), 3}, {tag_pairs(b, Provenance::bt), 1}}, rng);
  CHECK(mixed.size() == 60);
  CHECK(std::count_if(mixed.begin(), mixed.end(), [](const TaggedPair& t) { return t.tag == Provenance::bt; }) == 30);
  CHECK_THROWS(mix_corpora({{tag_pairs(a, Provenance::bitext), 0}}, rng));

  std::vector<TokenSequence> mono(11, TokenSequence{6});
  const auto shards = shard_with_replacement(mono, 4, rng);
  CHECK(shards.size() == 4);
  for (const auto& s : shards) CHECK(s.size() == 3);
}

TEST_CASE("synthetic tasks") {
  num::Rng rng(1);
  TaskConfig c;
  c.kind = TaskKind::reverse;
  c.n_bitext = 50;
  c.n_mono = 7;
  const auto d = make_task(c, rng);
  CHECK(d.bitext.size() == 50);
  CHECK(d.mono_src.size() == 7);
  for (const auto& p : d.bitext) {
    CHECK(p.src.size() >= c.min_len);
    CHECK(p.src.size() <= c.max_len);
    CHECK(TokenSequence(p.src.rbegin(), p.src.rend()) == p.tgt);
  }
  CHECK(number_words(0) == std::vector<std::string>{"zero"});
  CHECK(number_words(1215) == std::vector<std::string>{"one", "thousand", "two", "hundred", "fifteen"});
  CHECK(number_words(40) == std::vector<std::string>{"forty"});
  CHECK(parse_task(task_name(TaskKind::number_words)) == TaskKind::number_words);
  CHECK_THROWS(parse_task("sort"));
}

TEST_CASE("back-translation, distillation and speculation sets") {
  const ModelConfig cfg = tiny(12);
  const Model m1(transformer_genotype(1), cfg, 1), m2(transformer_genotype(1), cfg, 2);
  const std::vector<TokenSequence> src{{6, 7}, {8, 9, 10}, {11}};
  const BeamConfig beam{.beam = 2, .max_len = 5};
  num::Rng rng(4);

  const auto bt = back_translate(m1, src, beam, NoiseConfig::none(), rng);
  REQUIRE(bt.size() == 3);
  CHECK(bt[1].pair.tgt == src[1]);
  CHECK(bt[1].pair.src == translate(m1, src[1], beam));
  CHECK(bt[0].tag == Provenance::bt);

  const auto kd = distill(m2, src, beam);
  CHECK(kd[2].pair.tgt == translate(m2, src[2], beam));
  CHECK(kd[2].tag == Provenance::kd);

  std::vector<SentencePair> b1(20, {{6}, {7}});
  const auto spec = build_speculation_set({&m1, &m2}, src, b1, beam, rng);
  CHECK(spec.size() == 2 * 2 * src.size());
  CHECK(std::count_if(spec.begin(), spec.end(), [](const TaggedPair& t) { return t.origin == "bitext"; }) == 6);
  const auto small = build_speculation_set({&m1, &m2}, src, {{{6}, {7}}}, beam, rng);
  CHECK(small.size() == 12);
}

TEST_CASE("clean-subset fine-tuning and early stopping") {
  const ModelConfig cfg = tiny(12);
  Model m(transformer_genotype(1), cfg, 1);
  num::Rng rng(2);
  ParallelCorpus full = tag_pairs({{{6, 7}, {7, 6}}}, Provenance::bitext, "bitext");
  const auto bt = tag_pairs({{{8}, {9}}}, Provenance::bt, "bt");
  full.insert(full.end(), bt.begin(), bt.end());

  const auto before = m.params().fingerprint();
  CHECK(finetune_clean_subset(m, full, {"bitext"}, 4, num::AdamConfig{}, rng) == 1);
  CHECK(m.params().fingerprint() != before);
  CHECK_THROWS(finetune_clean_subset(m, full, {"web"}, 4, num::AdamConfig{}, rng));

  const std::vector<SentencePair> data{{{6, 7}, {7, 6}}, {{8, 9}, {9, 8}}};
  num::AdamConfig adam;
  adam.lr = 3e-2;
  const BeamConfig beam{.beam = 1, .max_len = 4};
  const auto r = finetune_early_stop(m, data, data, 30, 2, adam, beam, rng);
  REQUIRE(r.dev_bleu.size() == r.epochs_run + 1);
  for (std::size_t e = 1; e + 1 < r.dev_bleu.size(); ++e) CHECK(r.dev_bleu[e] >= r.dev_bleu[e - 1]);
  CHECK(dev_bleu(m, data, beam) == doctest::Approx(r.dev_bleu[r.best_epoch]));
}
