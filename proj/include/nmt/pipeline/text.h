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
#include <vector>

namespace nmt::pipeline {

// Unicode NFKC. Throws on invalid UTF-8.
std::string nfkc(std::string_view text);
bool valid_utf8(std::string_view text);
// NFKC, then whitespace-split and rejoined with single spaces.
std::string normalize_line(std::string_view text);

bool has_lowercase_letter(std::string_view text);
// Every code point is printable or a space.
bool all_printable(std::string_view text);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace nmt::pipeline
