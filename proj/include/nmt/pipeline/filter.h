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

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nmt::pipeline {

struct RawPair {
  std::string src;
  std::string tgt;
  // External aligner score, used only by the alignment rule.
  std::optional<double> align_score;
  friend bool operator==(const RawPair&, const RawPair&) = default;
};

enum class EnglishSide { none, source, target };

// Rules are checked in this order; the first that fires names the drop.
//   printable, length, ratio, prefix, lowercase, dedupe, alignment
struct FilterRules {
  bool printable = true;
  std::size_t min_tokens = 1;
  std::size_t max_tokens = 250;
  double max_ratio = 2.5;
  std::vector<std::string> prefixes{"User", "NGC"};
  bool require_lowercase = true;
  EnglishSide english = EnglishSide::source;
  bool dedupe = true;
  bool alignment = false;
  double align_threshold = 0.05;

  void validate() const;
};

struct DroppedPair {
  std::size_t line;  // 1-based
  std::string rule;
  RawPair pair;
};

struct FilterResult {
  std::vector<RawPair> kept;
  std::vector<std::size_t> kept_lines;
  std::vector<DroppedPair> dropped;
};

FilterResult filter_corpus(const std::vector<RawPair>& corpus, const FilterRules& rules);

// TSV: line_no, rule_id, "src ||| tgt".
void write_drop_log(std::ostream& out, const std::vector<DroppedPair>& dropped);

}  // namespace nmt::pipeline
