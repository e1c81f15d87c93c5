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

#include "nmt/seq2seq/beam.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace nmt {

bool banned_in_output(int id) {
  return id == special::kPad || id == special::kBos || id == special::kUnk || id == special::kMask ||
         id == special::kSep;
}

std::size_t auto_max_len(const Model& model, std::size_t source_len) {
  return std::min(2 * source_len + 10, model.config().max_len - 1);
}

namespace {

struct Candidate {
  double logprob;
  int token;
  std::size_t parent;
};

double final_score(double logprob, std::size_t length, double lp) {
  return logprob / std::pow(static_cast<double>(std::max<std::size_t>(length, 1)), lp);
}

}  // namespace

std::vector<Hypothesis> beam_search(const StepScorer& scorer, const BeamConfig& cfg) {
  if (cfg.beam == 0) throw Error("beam size must be positive");
  if (cfg.max_len == 0) throw Error("beam search needs an explicit max_len");
  std::vector<Hypothesis> alive{Hypothesis{}};
  std::vector<Hypothesis> finished;

  while (!alive.empty() && finished.size() < cfg.beam) {
    // At full length only EOS may follow.
    const bool last = alive.front().tokens.size() >= cfg.max_len;
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < alive.size(); ++i) {
      const std::vector<double> lp = scorer(alive[i].tokens);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        if (banned_in_output(static_cast<int>(t)) || !std::isfinite(lp[t])) continue;
        if (last && static_cast<int>(t) != special::kEos) continue;
        cands.push_back({alive[i].logprob + lp[t], static_cast<int>(t), i});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      if (a.token != b.token) return a.token < b.token;
      return a.parent < b.parent;
    });
    std::vector<Hypothesis> next;
    for (std::size_t r = 0; r < cands.size() && next.size() < cfg.beam; ++r) {
      const Candidate& c = cands[r];
      const Hypothesis& parent = alive[c.parent];
      if (c.token == special::kEos) {
        if (r < cfg.beam) {
          Hypothesis h{parent.tokens, c.logprob, 0.0, true};
          h.score = final_score(h.logprob, h.tokens.size() + 1, cfg.length_penalty);
          finished.push_back(std::move(h));
        }
        continue;
      }
      Hypothesis h{parent.tokens, c.logprob, 0.0, false};
      h.tokens.push_back(c.token);
      next.push_back(std::move(h));
    }
    alive = std::move(next);
    if (last) break;
  }

  std::vector<Hypothesis> out = std::move(finished);
  if (out.size() < cfg.beam) {
    for (Hypothesis& h : alive) {
      h.score = final_score(h.logprob, h.tokens.size(), cfg.length_penalty);
      out.push_back(std::move(h));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.finished != b.finished) return a.finished;
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
  if (out.size() > cfg.beam) out.resize(cfg.beam);
  return out;
}

std::vector<Hypothesis> beam_search(const Model& model, std::span<const int> source, const BeamConfig& cfg) {
  const EncodedSource enc = model.encode_source(source);
  BeamConfig c = cfg;
  if (c.max_len == 0) c.max_len = auto_max_len(model, trim_padding(source).size());
  c.max_len = std::min(c.max_len, model.config().max_len - 1);
  return beam_search([&](std::span<const int> prefix) { return model.next_logprobs(enc, prefix); }, c);
}

TokenSequence translate(const Model& model, std::span<const int> source, const BeamConfig& cfg) {
  auto hyps = beam_search(model, source, cfg);
  return hyps.empty() ? TokenSequence{} : hyps.front().tokens;
}

std::vector<std::vector<Hypothesis>> nbest_all(const Model& model, const std::vector<TokenSequence>& sources,
                                               const BeamConfig& cfg) {
  std::vector<std::vector<Hypothesis>> out(sources.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < sources.size(); ++i) {
    try {
      out[i] = beam_search(model, sources[i], cfg);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<TokenSequence> translate_all(const Model& model, const std::vector<TokenSequence>& sources,
                                         const BeamConfig& cfg) {
  auto nb = nbest_all(model, sources, cfg);
  std::vector<TokenSequence> out;
  out.reserve(nb.size());
  for (auto& h : nb) out.push_back(h.empty() ? TokenSequence{} : std::move(h.front().tokens));
  return out;
}

}  // namespace nmt
