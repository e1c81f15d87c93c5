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

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmt/seq2seq/vocab.h"

namespace nmt::pipeline {

inline constexpr std::string_view kEndOfWord = "</w>";

// Byte-pair merges learned greedily; the last symbol of a word carries "</w>".
class BpeModel {
 public:
  BpeModel() = default;
  BpeModel(std::vector<std::pair<std::string, std::string>> merges, Vocabulary vocab);

  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }
  const Vocabulary& vocabulary() const { return vocab_; }

  std::vector<std::string> segment_word(std::string_view word) const;
  std::vector<std::string> segment(std::string_view sentence) const;
  TokenSequence encode(std::string_view sentence) const;
  std::string decode(const TokenSequence& ids) const;

  // "#desknmt-bpe 1" header, one "left right" merge per line, then
  // "#vocab" and one token per line.
  std::string to_text() const;
  static BpeModel from_text(const std::string& text);

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
  std::map<std::pair<std::string, std::string>, std::size_t> rank_;
  Vocabulary vocab_;
};

// Word-initial symbols: code points, the last one suffixed with "</w>".
std::vector<std::string> word_symbols(std::string_view word);

// Learns up to `merges` merges from whitespace-tokenised lines of all
// corpora pooled together. Ties go to the lexicographically smallest pair.
BpeModel learn_bpe(const std::vector<std::vector<std::string>>& corpora, std::size_t merges);

// Joins subwords, turning "</w>" into word boundaries.
std::string detokenize(const std::vector<std::string>& subwords);

}  // namespace nmt::pipeline
