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
#include <optional>
#include <string>
#include <vector>

#include "nmt/pipeline/bpe.h"
#include "nmt/seq2seq/model.h"
#include "nmt/seq2seq/vocab.h"

namespace nmt::app {

// Model checkpoint plus the text front end needed to use it on raw files.
struct ModelBundle {
  Model model;
  Vocabulary vocab;
  std::optional<pipeline::BpeModel> bpe;
};

void save_bundle(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab,
                 const std::optional<pipeline::BpeModel>& bpe);
ModelBundle load_bundle(const std::filesystem::path& path);

// Normalised lines to ids through BPE when present, else whitespace words.
std::vector<TokenSequence> encode_lines(const std::vector<std::string>& lines, const Vocabulary& vocab,
                                        const std::optional<pipeline::BpeModel>& bpe);
std::string decode_ids(const TokenSequence& ids, const Vocabulary& vocab,
                       const std::optional<pipeline::BpeModel>& bpe);

// Corpus BLEU over words: BPE output is merged back first.
double word_bleu(const std::vector<TokenSequence>& hyps, const std::vector<TokenSequence>& refs,
                 const std::optional<pipeline::BpeModel>& bpe);

}  // namespace nmt::app
