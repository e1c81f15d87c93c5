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

#include "nmt/pipeline/text.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <filesystem>
#include <fstream>

#include "nmt/error.h"
#include "nmt/seq2seq/vocab.h"

namespace nmt::pipeline {

namespace {

template <typename F>
bool for_each_code_point(std::string_view s, F&& f) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
    if (!f(c)) return true;
  }
  return true;
}

}  // namespace

bool valid_utf8(std::string_view text) {
  return for_each_code_point(text, [](UChar32) { return true; });
}

std::string nfkc(std::string_view text) {
  if (!valid_utf8(text)) throw Error("text is not valid UTF-8");
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error(std::string("ICU normalizer unavailable: ") + u_errorName(status));
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = norm->normalize(in, status);
  if (U_FAILURE(status)) throw Error(std::string("NFKC failed: ") + u_errorName(status));
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string normalize_line(std::string_view text) {
  std::string out;
  for (const auto& w : split_whitespace(nfkc(text))) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

bool has_lowercase_letter(std::string_view text) {
  bool found = false;
  for_each_code_point(text, [&](UChar32 c) {
    found = u_islower(c);
    return !found;
  });
  return found;
}

bool all_printable(std::string_view text) {
  bool ok = true;
  const bool valid = for_each_code_point(text, [&](UChar32 c) {
    ok = c == ' ' || (u_isprint(c) && !u_iscntrl(c));
    return ok;
  });
  return valid && ok;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("write failed for " + path);
}

}  // namespace nmt::pipeline
