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

#include "nmt/eval/rerank.h"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <istream>
#include <ostream>
#include <sstream>

#include "nmt/eval/bleu.h"

namespace nmt::eval {

NBestList from_hypotheses(const std::vector<std::vector<Hypothesis>>& hyps) {
  NBestList out(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    for (const Hypothesis& h : hyps[i]) out[i].push_back({h.tokens, h.logprob, {}});
  }
  return out;
}

std::vector<std::size_t> rerank(const NBestList& nbest, const RerankConfig& cfg) {
  if (std::none_of(cfg.weights.begin(), cfg.weights.end(), [](double w) { return w != 0.0; })) {
    throw Error("rerank needs at least one nonzero weight");
  }
  std::vector<std::size_t> out;
  out.reserve(nbest.size());
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    if (nbest[i].empty()) throw Error("sentence " + std::to_string(i) + " has no hypotheses");
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < nbest[i].size(); ++j) {
      const ScoredHypothesis& h = nbest[i][j];
      if (h.scores.size() != cfg.weights.size()) {
        throw Error("hypothesis carries " + std::to_string(h.scores.size()) + " scores, config has " +
                    std::to_string(cfg.weights.size()) + " weights");
      }
      double s = cfg.length_weight * static_cast<double>(h.tokens.size());
      for (std::size_t k = 0; k < cfg.weights.size(); ++k) s += cfg.weights[k] * h.scores[k];
      if (j == 0 || s > best_score) best = j, best_score = s;
    }
    out.push_back(best);
  }
  return out;
}

std::vector<TokenSequence> rerank_tokens(const NBestList& nbest, const RerankConfig& cfg) {
  const auto idx = rerank(nbest, cfg);
  std::vector<TokenSequence> out;
  out.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out.push_back(nbest[i][idx[i]].tokens);
  return out;
}

void attach_scores(NBestList& nbest, const std::vector<TokenSequence>& sources, const std::vector<Scorer>& scorers) {
  if (sources.size() != nbest.size()) throw Error("attach_scores needs one source per n-best entry");
  for (const Scorer& s : scorers) {
    if (s.model == nullptr) throw Error("null scorer");
    if (s.model->config().tgt_vocab != scorers.front().model->config().tgt_vocab ||
        s.model->config().src_vocab != scorers.front().model->config().src_vocab) {
      throw Error("scorers disagree on vocabulary size");
    }
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    try {
      for (ScoredHypothesis& h : nbest[i]) {
        for (const Scorer& s : scorers) h.scores.push_back(score_sequence(*s.model, sources[i], h.tokens, s.reversed));
      }
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

RerankConfig tune_rerank(const NBestList& nbest, const std::vector<TokenSequence>& refs,
                         std::vector<std::vector<double>> weight_grid, std::vector<double> lambda_grid) {
  if (weight_grid.empty() || lambda_grid.empty()) throw Error("rerank grids must be non-empty");
  std::sort(weight_grid.begin(), weight_grid.end());
  std::sort(lambda_grid.begin(), lambda_grid.end());
  RerankConfig best;
  double best_bleu = -1.0;
  for (double lambda : lambda_grid) {
    for (const auto& w : weight_grid) {
      RerankConfig c{w, lambda};
      const double b = corpus_bleu(rerank_tokens(nbest, c), refs);
      if (b > best_bleu) best_bleu = b, best = c;
    }
  }
  return best;
}

std::vector<std::vector<double>> weight_grid(std::size_t k, const std::vector<double>& values) {
  std::vector<std::vector<double>> out{{}};
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (double v : values) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  std::erase_if(out, [](const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; });
  });
  return out;
}

namespace {
std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_nbest(std::ostream& out, const NBestList& nbest) {
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    for (std::size_t j = 0; j < nbest[i].size(); ++j) {
      const ScoredHypothesis& h = nbest[i][j];
      out << i << '\t' << j << '\t';
      for (std::size_t t = 0; t < h.tokens.size(); ++t) out << (t ? " " : "") << h.tokens[t];
      out << '\t' << fmt17(h.gen_score);
      for (double s : h.scores) out << '\t' << fmt17(s);
      out << '\n';
    }
  }
}

NBestList read_nbest(std::istream& in) {
  NBestList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t p; (p = line.find('\t', start)) != std::string::npos; start = p + 1) cols.push_back(line.substr(start, p - start));
    cols.push_back(line.substr(start));
    try {
      if (cols.size() < 4) throw std::invalid_argument("columns");
      const std::size_t sid = std::stoull(cols[0]), rank = std::stoull(cols[1]);
      if (sid >= out.size()) out.resize(sid + 1);
      if (rank != out[sid].size()) throw std::invalid_argument("rank");
      ScoredHypothesis h;
      for (const auto& tok : split_whitespace(cols[2])) h.tokens.push_back(std::stoi(tok));
      h.gen_score = std::stod(cols[3]);
      for (std::size_t c = 4; c < cols.size(); ++c) h.scores.push_back(std::stod(cols[c]));
      out[sid].push_back(std::move(h));
    } catch (const std::logic_error&) {
      throw Error("n-best line " + std::to_string(lineno) + " is malformed");
    }
  }
  return out;
}

}  // namespace nmt::eval
