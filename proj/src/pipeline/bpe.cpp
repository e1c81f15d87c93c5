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

#include "nmt/pipeline/bpe.h"

#include <unicode/utf8.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "nmt/error.h"

namespace nmt::pipeline {

std::vector<std::string> word_symbols(std::string_view word) {
  std::vector<std::string> out;
  const auto* p = reinterpret_cast<const uint8_t*>(word.data());
  const int32_t n = static_cast<int32_t>(word.size());
  int32_t i = 0;
  while (i < n) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) throw Error("invalid UTF-8 in '" + std::string(word) + "'");
    out.emplace_back(word.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
  }
  if (!out.empty()) out.back() += kEndOfWord;
  return out;
}

namespace {

void merge_pair(std::vector<std::string>& syms, const std::string& a, const std::string& b) {
  std::vector<std::string> out;
  out.reserve(syms.size());
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
      out.push_back(a + b);
      ++i;
    } else {
      out.push_back(std::move(syms[i]));
    }
  }
  syms = std::move(out);
}

}  // namespace

BpeModel::BpeModel(std::vector<std::pair<std::string, std::string>> merges, Vocabulary vocab)
    : merges_(std::move(merges)), vocab_(std::move(vocab)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) rank_.emplace(merges_[i], i);
}

std::vector<std::string> BpeModel::segment_word(std::string_view word) const {
  std::vector<std::string> syms = word_symbols(word);
  while (syms.size() > 1) {
    std::size_t best = SIZE_MAX;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = rank_.find({syms[i], syms[i + 1]});
      if (it != rank_.end()) best = std::min(best, it->second);
    }
    if (best == SIZE_MAX) break;
    merge_pair(syms, merges_[best].first, merges_[best].second);
  }
  return syms;
}

std::vector<std::string> BpeModel::segment(std::string_view sentence) const {
  std::vector<std::string> out;
  for (const auto& w : split_whitespace(sentence)) {
    auto s = segment_word(w);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

TokenSequence BpeModel::encode(std::string_view sentence) const {
  TokenSequence ids;
  for (const auto& s : segment(sentence)) ids.push_back(vocab_.id(s));
  return ids;
}

std::string BpeModel::decode(const TokenSequence& ids) const {
  std::vector<std::string> subwords;
  for (int id : ids) {
    if (!Vocabulary::is_special(id) && id >= 0 && static_cast<std::size_t>(id) < vocab_.size()) {
      subwords.push_back(vocab_.token(id));
    }
  }
  return detokenize(subwords);
}

std::string BpeModel::to_text() const {
  std::ostringstream os;
  os << "#desknmt-bpe 1\n";
  for (const auto& [a, b] : merges_) os << a << ' ' << b << '\n';
  os << "#vocab\n" << vocab_.to_text();
  return os.str();
}

BpeModel BpeModel::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "#desknmt-bpe 1") throw Error("not a BPE model file");
  std::vector<std::pair<std::string, std::string>> merges;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line == "#vocab") break;
    const auto parts = split_whitespace(line);
    if (parts.size() != 2) throw Error("BPE model line " + std::to_string(lineno) + " is not a merge");
    merges.emplace_back(parts[0], parts[1]);
  }
  std::ostringstream rest;
  rest << in.rdbuf();
  return BpeModel(std::move(merges), Vocabulary::from_text(rest.str()));
}

BpeModel learn_bpe(const std::vector<std::vector<std::string>>& corpora, std::size_t n_merges) {
  std::map<std::string, std::size_t> word_counts;
  bool any = false;
  for (const auto& corpus : corpora) {
    for (const auto& line : corpus) {
      for (const auto& w : split_whitespace(line)) {
        ++word_counts[w];
        any = true;
      }
    }
  }
  if (!any) throw Error("BPE needs a non-empty corpus");

  std::vector<std::vector<std::string>> words;
  std::vector<std::size_t> freqs;
  std::set<std::string> initial;
  for (const auto& [w, c] : word_counts) {
    words.push_back(word_symbols(w));
    freqs.push_back(c);
    initial.insert(words.back().begin(), words.back().end());
  }

  std::vector<std::pair<std::string, std::string>> merges;
  while (merges.size() < n_merges) {
    std::map<std::pair<std::string, std::string>, std::size_t> pairs;
    for (std::size_t i = 0; i < words.size(); ++i) {
      for (std::size_t j = 0; j + 1 < words[i].size(); ++j) pairs[{words[i][j], words[i][j + 1]}] += freqs[i];
    }
    if (pairs.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    merges.push_back(best->first);
    for (auto& w : words) merge_pair(w, best->first.first, best->first.second);
  }

  Vocabulary vocab;
  for (const auto& s : initial) vocab.add(s);
  for (const auto& [a, b] : merges) vocab.add(a + b);
  return BpeModel(std::move(merges), std::move(vocab));
}

std::string detokenize(const std::vector<std::string>& subwords) {
  std::string out;
  for (const auto& s : subwords) {
    if (s.size() >= kEndOfWord.size() && s.compare(s.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
      out.append(s, 0, s.size() - kEndOfWord.size());
      out += ' ';
    } else {
      out += s;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace nmt::pipeline
