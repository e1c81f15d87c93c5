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

#include "nmt/app/artifacts.h"

#include "nmt/eval/bleu.h"
#include "nmt/numerics/checkpoint.h"
#include "nmt/pipeline/text.h"

namespace nmt::app {

void save_bundle(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab,
                 const std::optional<pipeline::BpeModel>& bpe) {
  num::Checkpoint c = model.to_checkpoint();
  c.metadata["vocab"] = vocab.to_text();
  if (bpe) c.metadata["bpe"] = bpe->to_text();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  num::write_checkpoint(path, c);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  const num::Checkpoint c = num::read_checkpoint(path);
  if (!c.metadata.count("vocab")) throw Error(path.string() + " has no vocabulary; it was not written by desknmt");
  std::optional<pipeline::BpeModel> bpe;
  if (c.metadata.count("bpe")) bpe = pipeline::BpeModel::from_text(c.meta("bpe"));
  return {Model::from_checkpoint(c), Vocabulary::from_text(c.meta("vocab")), std::move(bpe)};
}

std::vector<TokenSequence> encode_lines(const std::vector<std::string>& lines, const Vocabulary& vocab,
                                        const std::optional<pipeline::BpeModel>& bpe) {
  std::vector<TokenSequence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) {
    const std::string norm = pipeline::normalize_line(l);
    out.push_back(bpe ? bpe->encode(norm) : vocab.encode(norm));
  }
  return out;
}

std::string decode_ids(const TokenSequence& ids, const Vocabulary& vocab,
                       const std::optional<pipeline::BpeModel>& bpe) {
  return bpe ? bpe->decode(ids) : vocab.decode(ids);
}

double word_bleu(const std::vector<TokenSequence>& hyps, const std::vector<TokenSequence>& refs,
                 const std::optional<pipeline::BpeModel>& bpe) {
  if (!bpe) return eval::corpus_bleu(hyps, refs);
  std::vector<std::string> h, r;
  for (const auto& x : hyps) h.push_back(bpe->decode(x));
  for (const auto& x : refs) r.push_back(bpe->decode(x));
  return eval::corpus_bleu(h, r);
}

}  // namespace nmt::app
