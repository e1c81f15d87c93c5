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

#include "nmt/pipeline/filter.h"

#include <algorithm>
#include <ostream>
#include <set>

#include "nmt/error.h"
#include "nmt/pipeline/text.h"
#include "nmt/seq2seq/vocab.h"

namespace nmt::pipeline {

void FilterRules::validate() const {
  if (!(max_ratio > 1.0)) throw Error("filter: max_ratio must be > 1");
  if (min_tokens > max_tokens) throw Error("filter: min_tokens exceeds max_tokens");
}

namespace {

bool starts_with_any(const std::string& s, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return !p.empty() && s.rfind(p, 0) == 0; });
}

const char* first_rule(const RawPair& p, const FilterRules& r, std::set<std::pair<std::string, std::string>>& seen) {
  if (r.printable && (!all_printable(p.src) || !all_printable(p.tgt))) return "printable";
  const std::size_t ls = split_whitespace(p.src).size(), lt = split_whitespace(p.tgt).size();
  if (ls < r.min_tokens || lt < r.min_tokens || ls > r.max_tokens || lt > r.max_tokens) return "length";
  const double hi = static_cast<double>(std::max(ls, lt)), lo = static_cast<double>(std::min(ls, lt));
  if (lo > 0 && hi / lo > r.max_ratio) return "ratio";
  if (starts_with_any(p.src, r.prefixes) || starts_with_any(p.tgt, r.prefixes)) return "prefix";
  if (r.require_lowercase && r.english != EnglishSide::none) {
    const std::string& en = r.english == EnglishSide::source ? p.src : p.tgt;
    if (!has_lowercase_letter(en)) return "lowercase";
  }
  if (r.dedupe && !seen.emplace(p.src, p.tgt).second) return "dedupe";
  if (r.alignment && (!p.align_score || *p.align_score < r.align_threshold)) return "alignment";
  return nullptr;
}

}  // namespace

FilterResult filter_corpus(const std::vector<RawPair>& corpus, const FilterRules& rules) {
  rules.validate();
  FilterResult out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (const char* rule = first_rule(corpus[i], rules, seen)) {
      out.dropped.push_back({i + 1, rule, corpus[i]});
    } else {
      out.kept.push_back(corpus[i]);
      out.kept_lines.push_back(i + 1);
    }
  }
  return out;
}

void write_drop_log(std::ostream& out, const std::vector<DroppedPair>& dropped) {
  for (const auto& d : dropped) out << d.line << '\t' << d.rule << '\t' << d.pair.src << " ||| " << d.pair.tgt << '\n';
}

}  // namespace nmt::pipeline
