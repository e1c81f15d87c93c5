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

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nmt {

// Integer-encoded sentence. Carries no implicit BOS/EOS; consumers add them.
using TokenSequence = std::vector<int>;

namespace special {
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
// Placeholder written over masked fragments during pre-training.
inline constexpr int kMask = 4;
// Joins two masked sentences into one encoder input.
inline constexpr int kSep = 5;
inline constexpr int kCount = 6;
}  // namespace special

class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& regular_tokens);

  // Returns the existing id when the token is already present.
  int add(const std::string& token);
  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  static bool is_special(int id) { return id >= 0 && id < special::kCount; }

  // Whitespace-separated words to ids.
  TokenSequence encode(std::string_view text) const;
  // Space-joined tokens, special ids skipped.
  std::string decode(const TokenSequence& ids) const;
  std::vector<std::string> words(const TokenSequence& ids) const;

  // One token per line, specials included, in id order.
  std::string to_text() const;
  static Vocabulary from_text(const std::string& text);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace nmt
