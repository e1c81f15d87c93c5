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

#include "nmt/pipeline/synthetic.h"

#include <algorithm>
#include <cmath>

namespace nmt::pipeline {

TaskKind parse_task(const std::string& name) {
  if (name == "copy") return TaskKind::copy;
  if (name == "reverse") return TaskKind::reverse;
  if (name == "number-words") return TaskKind::number_words;
  throw Error("unknown task '" + name + "' (copy | reverse | number-words)");
}

std::string task_name(TaskKind k) {
  switch (k) {
    case TaskKind::copy: return "copy";
    case TaskKind::reverse: return "reverse";
    case TaskKind::number_words: return "number-words";
  }
  return "?";
}

std::vector<std::string> number_words(std::size_t n) {
  static const char* ones[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
                               "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
                               "seventeen", "eighteen", "nineteen"};
  static const char* tens[] = {"", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
  if (n >= 1000000) throw Error("number too large");
  std::vector<std::string> out;
  auto below_thousand = [&](std::size_t v) {
    if (v >= 100) {
      out.emplace_back(ones[v / 100]);
      out.emplace_back("hundred");
      v %= 100;
    }
    if (v >= 20) {
      out.emplace_back(tens[v / 10]);
      v %= 10;
      if (v) out.emplace_back(ones[v]);
    } else if (v > 0) {
      out.emplace_back(ones[v]);
    }
  };
  if (n == 0) return {"zero"};
  if (n >= 1000) {
    below_thousand(n / 1000);
    out.emplace_back("thousand");
  }
  below_thousand(n % 1000);
  return out;
}

namespace {

class WordSampler {
 public:
  WordSampler(std::size_t n, double zipf) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) cdf_[i] = acc += std::pow(static_cast<double>(i + 1), -zipf);
    for (double& c : cdf_) c /= acc;
  }
  std::size_t operator()(num::Rng& rng) const {
    const double u = rng.uniform();
    return static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end() - 1, u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace

TaskData make_task(const TaskConfig& cfg, num::Rng& rng) {
  if (cfg.min_len < 1 || cfg.min_len > cfg.max_len) throw Error("task: need 1 <= min_len <= max_len");
  TaskData d;
  std::vector<int> src_ids, tgt_ids;
  std::size_t max_number = 0;

  if (cfg.kind == TaskKind::number_words) {
    for (int digit = 0; digit < 10; ++digit) src_ids.push_back(d.vocab.add(std::to_string(digit)));
    for (const char* w : {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
                          "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
                          "nineteen", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
                          "hundred", "thousand"}) {
      d.vocab.add(w);
    }
    // max_len digits, capped at six.
    max_number = static_cast<std::size_t>(std::pow(10.0, static_cast<double>(std::min<std::size_t>(cfg.max_len, 6))));
  } else {
    if (cfg.words == 0) throw Error("task: need at least one word");
    if (cfg.synonyms == 0) throw Error("task: need at least one surface form per word");
    if (cfg.synonyms > 1 && !cfg.separate_target_words) throw Error("task: synonyms need separate target words");
    for (std::size_t i = 0; i < cfg.words; ++i) src_ids.push_back(d.vocab.add("s" + std::to_string(i)));
    for (std::size_t k = 1; k < cfg.synonyms; ++k) {
      for (std::size_t i = 0; i < cfg.words; ++i) {
        src_ids.push_back(d.vocab.add("s" + std::to_string(i) + "_" + std::to_string(k)));
      }
    }
    if (cfg.separate_target_words) {
      for (std::size_t i = 0; i < cfg.words; ++i) tgt_ids.push_back(d.vocab.add("t" + std::to_string(i)));
    } else {
      tgt_ids = src_ids;
    }
  }

  const WordSampler sampler(std::max<std::size_t>(cfg.words, 1), cfg.zipf);
  std::vector<std::vector<std::size_t>> next_words;
  if (cfg.successors > 0 && cfg.kind != TaskKind::number_words) {
    if (cfg.successors > cfg.words) throw Error("task: successors exceeds the word count");
    for (std::size_t w = 0; w < cfg.words; ++w) {
      std::vector<std::size_t> all(cfg.words);
      for (std::size_t i = 0; i < cfg.words; ++i) all[i] = i;
      rng.shuffle(all);
      all.resize(cfg.successors);
      next_words.push_back(std::move(all));
    }
  }
  // Index form: positions into src_ids / tgt_ids.
  auto sample_indices = [&] {
    std::vector<std::size_t> w(cfg.min_len + rng.index(cfg.max_len - cfg.min_len + 1));
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = next_words.empty() || i == 0 ? sampler(rng) : next_words[w[i - 1]][rng.index(cfg.successors)];
    }
    return w;
  };
  auto make_pair = [&]() -> SentencePair {
    if (cfg.kind == TaskKind::number_words) {
      const std::size_t n = rng.index(max_number);
      SentencePair p;
      for (char c : std::to_string(n)) p.src.push_back(d.vocab.id(std::string(1, c)));
      for (const auto& w : number_words(n)) p.tgt.push_back(d.vocab.id(w));
      return p;
    }
    const auto w = sample_indices();
    SentencePair p;
    for (std::size_t i : w) {
      const std::size_t form = cfg.synonyms > 1 ? rng.index(cfg.synonyms) : 0;
      p.src.push_back(src_ids[i + cfg.words * form]);
    }
    for (std::size_t i : w) p.tgt.push_back(tgt_ids[i]);
    if (cfg.kind == TaskKind::reverse) std::reverse(p.tgt.begin(), p.tgt.end());
    return p;
  };

  for (std::size_t i = 0; i < cfg.n_bitext; ++i) d.bitext.push_back(make_pair());
  for (std::size_t i = 0; i < cfg.n_dev; ++i) d.dev.push_back(make_pair());
  for (std::size_t i = 0; i < cfg.n_test; ++i) d.test.push_back(make_pair());
  for (std::size_t i = 0; i < cfg.n_mono; ++i) d.mono_src.push_back(make_pair().src);
  for (std::size_t i = 0; i < cfg.n_mono; ++i) d.mono_tgt.push_back(make_pair().tgt);
  return d;
}

}  // namespace nmt::pipeline
