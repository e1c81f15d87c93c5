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

#include "nmt/eval/bleu.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "nmt/error.h"

namespace nmt::eval {

namespace {

template <typename T>
BleuStats stats_impl(const std::vector<std::vector<T>>& hyps, const std::vector<std::vector<T>>& refs) {
  if (hyps.size() != refs.size()) {
    throw Error("BLEU needs one reference per hypothesis (" + std::to_string(hyps.size()) + " vs " +
                std::to_string(refs.size()) + ")");
  }
  if (refs.empty()) throw Error("BLEU needs at least one reference");
  BleuStats s;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto& h = hyps[i];
    const auto& r = refs[i];
    s.hyp_len += h.size();
    s.ref_len += r.size();
    for (std::size_t n = 1; n <= kBleuOrder; ++n) {
      if (h.size() < n) continue;
      std::map<std::vector<T>, std::size_t> ref_counts;
      for (std::size_t j = 0; j + n <= r.size(); ++j) ++ref_counts[std::vector<T>(r.begin() + j, r.begin() + j + n)];
      std::map<std::vector<T>, std::size_t> hyp_counts;
      for (std::size_t j = 0; j + n <= h.size(); ++j) ++hyp_counts[std::vector<T>(h.begin() + j, h.begin() + j + n)];
      for (const auto& [gram, c] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) s.matches[n - 1] += std::min(c, it->second);
      }
      s.totals[n - 1] += h.size() - n + 1;
    }
  }
  return s;
}

std::vector<std::vector<std::string>> tokenize(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(split_whitespace(l));
  return out;
}

}  // namespace

BleuStats bleu_stats(const std::vector<TokenSequence>& hyps, const std::vector<TokenSequence>& refs) {
  return stats_impl(hyps, refs);
}

BleuStats bleu_stats(const std::vector<std::vector<std::string>>& hyps,
                     const std::vector<std::vector<std::string>>& refs) {
  return stats_impl(hyps, refs);
}

double bleu_from_stats(const BleuStats& s, bool add_one) {
  if (s.hyp_len == 0) return 0.0;
  double log_p = 0.0;
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    double m = static_cast<double>(s.matches[n]), t = static_cast<double>(s.totals[n]);
    if (add_one && n > 0) m += 1.0, t += 1.0;
    if (m == 0.0 || t == 0.0) return 0.0;
    log_p += std::log(m / t);
  }
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len)));
  return 100.0 * bp * std::exp(log_p / static_cast<double>(kBleuOrder));
}

double corpus_bleu(const std::vector<TokenSequence>& hyps, const std::vector<TokenSequence>& refs, bool add_one) {
  return bleu_from_stats(bleu_stats(hyps, refs), add_one);
}

double corpus_bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs, bool add_one) {
  return bleu_from_stats(bleu_stats(tokenize(hyps), tokenize(refs)), add_one);
}

}  // namespace nmt::eval
