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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nmt/numerics/parameter.h"

namespace nmt::num {

// Binary container, all integers little-endian:
//   magic "DNMTCKPT" | u32 version (1)
//   u32 n_meta  | n_meta x (u32 len, key bytes, u32 len, value bytes)
//   u32 n_tensor| n_tensor x (u32 len, name bytes, u32 rank, rank x u64 dim,
//                             product(dims) x f64 little-endian)
// See docs/checkpoint-format.md.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
  const std::string& meta(const std::string& key) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint params_to_checkpoint(const ParamStore& params);
// Requires an exact match of names and shapes.
void load_params(ParamStore& params, const Checkpoint& ckpt);

}  // namespace nmt::num
