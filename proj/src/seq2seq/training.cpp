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

#include "nmt/seq2seq/training.h"

#include <algorithm>

#include "nmt/numerics/ops.h"

namespace nmt {

num::NodeId batch_nll(num::Graph& g, const Model& model, std::span<const SentencePair> batch,
                      const ForwardOptions& opt) {
  if (batch.empty()) throw Error("empty batch");
  num::NodeId total{};
  for (const SentencePair& p : batch) {
    num::NodeId l = model.sequence_nll(g, p.src, p.tgt, true, opt);
    total = total.valid() ? num::add(g, total, l) : l;
  }
  return num::scale(g, total, 1.0 / static_cast<double>(batch.size()));
}

double train_step(Model& model, num::Adam& adam, std::span<const SentencePair> batch, num::Rng& rng) {
  num::Graph g;
  ForwardOptions opt;
  opt.train = true;
  opt.rng = &rng;
  num::NodeId loss = batch_nll(g, model, batch, opt);
  const double value = g.value(loss).item();
  adam.step(model.params(), num::backward(g, loss));
  return value;
}

double train_epoch(Model& model, num::Adam& adam, std::vector<SentencePair> data, std::size_t batch_size,
                   num::Rng& rng) {
  if (data.empty()) throw Error("empty training set");
  if (batch_size == 0) throw Error("batch size must be positive");
  rng.shuffle(data);
  double sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t i = 0; i < data.size(); i += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - i);
    sum += train_step(model, adam, std::span<const SentencePair>(data).subspan(i, n), rng);
    ++batches;
  }
  return sum / static_cast<double>(batches);
}

double corpus_nll(const Model& model, std::span<const SentencePair> data) {
  if (data.empty()) return 0.0;
  std::vector<double> nll(data.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.size(); ++i) {
    num::Graph g(false);
    nll[i] = g.value(model.sequence_nll(g, data[i].src, data[i].tgt)).item();
  }
  double s = 0.0;
  for (double v : nll) s += v;
  return s / static_cast<double>(data.size());
}

std::vector<SentencePair> reversed_pairs(std::span<const SentencePair> data) {
  std::vector<SentencePair> out;
  out.reserve(data.size());
  for (const auto& p : data) out.push_back({p.tgt, p.src});
  return out;
}

}  // namespace nmt
