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

#include "nmt/seq2seq/vocab.h"

#include <sstream>

#include "nmt/error.h"

namespace nmt {

namespace {
const char* const kSpecialNames[special::kCount] = {"<pad>", "<s>", "</s>", "<unk>", "<mask>", "<sep>"};
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* s : kSpecialNames) add(s);
}

Vocabulary::Vocabulary(const std::vector<std::string>& regular_tokens) : Vocabulary() {
  for (const auto& t : regular_tokens) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? special::kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence ids;
  for (const auto& w : split_whitespace(text)) ids.push_back(id(w));
  return ids;
}

std::vector<std::string> Vocabulary::words(const TokenSequence& ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (!is_special(id)) out.push_back(token(id));
  }
  return out;
}

std::string Vocabulary::decode(const TokenSequence& ids) const {
  std::string out;
  for (const auto& w : words(ids)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < special::kCount) throw Error("vocabulary text is missing the special tokens");
  for (int i = 0; i < special::kCount; ++i) {
    if (lines[static_cast<std::size_t>(i)] != kSpecialNames[i]) {
      throw Error("vocabulary text: expected special '" + std::string(kSpecialNames[i]) + "' on line " +
                  std::to_string(i + 1));
    }
  }
  Vocabulary v;
  for (std::size_t i = special::kCount; i < lines.size(); ++i) {
    if (v.contains(lines[i])) throw Error("vocabulary text: duplicate token '" + lines[i] + "'");
    v.add(lines[i]);
  }
  return v;
}

}  // namespace nmt
