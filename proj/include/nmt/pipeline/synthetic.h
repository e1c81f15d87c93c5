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
#include <vector>

#include "nmt/numerics/rng.h"
#include "nmt/seq2seq/training.h"

namespace nmt::pipeline {

enum class TaskKind { copy, reverse, number_words };
TaskKind parse_task(const std::string& name);
std::string task_name(TaskKind k);

struct TaskConfig {
  TaskKind kind = TaskKind::copy;
  std::size_t words = 20;    // content vocabulary per side
  std::size_t min_len = 3;
  std::size_t max_len = 12;
  // Word frequency ~ rank^-zipf; 0 is uniform.
  double zipf = 0.0;
  // Target side uses its own word forms ("t3" for "s3") instead of sharing.
  bool separate_target_words = false;
  // With k > 0 every word is followed by one of k fixed successors (a sparse
  // bigram language); 0 draws each word independently.
  std::size_t successors = 0;
  // Source surface forms per word, picked at random per token; all of them
  // translate to the same target word.
  std::size_t synonyms = 1;
  std::size_t n_bitext = 500;
  std::size_t n_mono = 0;   // per side, not parallel to each other
  std::size_t n_dev = 100;
  std::size_t n_test = 100;
};

struct TaskData {
  Vocabulary vocab;
  std::vector<SentencePair> bitext, dev, test;
  std::vector<TokenSequence> mono_src, mono_tgt;
};

TaskData make_task(const TaskConfig& cfg, num::Rng& rng);

// English number words for 0 <= n < 10^6.
std::vector<std::string> number_words(std::size_t n);

}  // namespace nmt::pipeline
