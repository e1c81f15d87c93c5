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
#include <string>
#include <vector>

#include "nmt/error.h"

namespace nmt::app {

// Config problems; `path()` is "section.key" (or just the section).
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& msg) : Error(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunSection {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::string output;  // directory under the output root; defaults to name
  std::vector<std::string> stages{"baseline"};
};

struct TaskSection {
  std::string kind = "copy";  // copy | reverse | number-words | files
  std::size_t words = 20;
  std::size_t min_len = 3;
  std::size_t max_len = 12;
  double zipf = 0.0;
  bool separate_target_words = false;
  std::size_t successors = 0;
  std::size_t synonyms = 1;
  std::size_t n_bitext = 500;
  std::size_t n_mono = 0;
  std::size_t n_dev = 100;
  std::size_t n_test = 100;
  // Pairs with a random target appended to the bitext, tagged "noisy".
  std::size_t noisy_pairs = 0;
  std::string train_src, train_tgt, dev_src, dev_tgt, test_src, test_tgt, mono_src, mono_tgt;
  std::size_t bpe_merges = 0;
};

struct ModelSection {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 128;
  std::size_t layers = 2;
  double dropout = 0.1;
  std::size_t max_len = 64;
  bool tied_output = false;
  bool shared_embeddings = true;
  std::string genotype = "transformer";
};

struct TrainSection {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  double clip_norm = 0.0;
};

struct DecodeSection {
  std::size_t beam = 5;
  double length_penalty = 1.0;
  std::size_t max_len = 0;
};

struct MassSection {
  std::size_t steps = 500;
  std::size_t batch_size = 16;
  double ratio = 0.5;
  double lr = 1e-3;
};

struct MadlSection {
  std::size_t agents = 1;  // extra agents per direction
  std::size_t epochs = 3;
  double mono_fraction = 1.0;
  std::size_t refresh_every = 0;
  double lr = 5e-4;
};

struct ScaSection {
  double gamma = 0.15;
  double temperature = 1.0;
  std::size_t lm_d_model = 32;
  std::size_t lm_layers = 1;
  std::size_t lm_epochs = 10;
};

struct BtSection {
  std::size_t rounds = 1;
  bool use_kd = true;
  std::size_t bitext_upsample = 1;
  std::size_t bt_upsample = 1;
  std::size_t kd_upsample = 1;
  bool from_scratch = true;
  double p_drop = 0.1;
  double p_blank = 0.1;
  std::size_t swap_window = 3;
  double tolerance = 0.0;
};

struct FinetuneSection {
  double lr = 2e-4;
  std::size_t batch_size = 16;
};

struct EnsembleSection {
  std::size_t size = 3;
};

struct SpeculateSection {
  std::size_t max_epochs = 5;
  double lr = 2e-4;
};

struct NaoSection {
  std::size_t pool = 50;
  std::size_t iterations = 5;
  std::size_t top_k = 5;
  std::vector<double> eta{1.0, 2.0, 4.0};
  std::size_t supernet_steps = 300;
  std::size_t eval_budget = 0;
  std::size_t d_arch = 64;
  std::size_t d_hidden = 64;
  std::size_t surrogate_epochs = 300;
  bool train_searched = true;
};

struct RerankSection {
  std::size_t beam = 12;
  std::vector<double> weight_values{0.0, 0.5, 1.0};
  std::vector<double> length_weights{0.0, 0.5, 1.0};
  bool use_nao = true;
};

struct ExperimentConfig {
  RunSection run;
  TaskSection task;
  ModelSection model;
  TrainSection train;
  DecodeSection decode;
  MassSection mass;
  MadlSection madl;
  ScaSection sca;
  BtSection bt;
  FinetuneSection finetune;
  EnsembleSection ensemble;
  SpeculateSection speculate;
  NaoSection nao;
  RerankSection rerank;

  // Visits every field as (section, key, field, help).
  template <typename B>
  void bind(B& b);
};

inline const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> s{"baseline", "mass",     "bt",     "madl",   "sca",
                                          "finetune", "ensemble", "speculate", "search", "rerank"};
  return s;
}

// Both throw SchemaError; malformed lines report "line N".
ExperimentConfig parse_experiment(const std::string& text);
ExperimentConfig load_experiment(const std::filesystem::path& path);
// Canonical text form (every key, fixed order).
std::string to_text(const ExperimentConfig& cfg);
// Markdown table of every key with its default and description.
std::string schema_markdown();

// $NMT_OUTPUT_ROOT, or ./runs.
std::filesystem::path output_root();

template <typename B>
void ExperimentConfig::bind(B& b) {
  b("run", "name", run.name, "experiment name");
  b("run", "seed", run.seed, "master seed; every stage derives its own");
  b("run", "output", run.output, "directory under the output root (default: name)");
  b("run", "stages", run.stages, "comma-separated stages, run in order");

  b("task", "kind", task.kind, "copy, reverse, number-words or files");
  b("task", "words", task.words, "content words per side");
  b("task", "min_len", task.min_len, "shortest sentence");
  b("task", "max_len", task.max_len, "longest sentence (digits for number-words, at most 6)");
  b("task", "zipf", task.zipf, "Zipf exponent of word frequencies (0 = uniform)");
  b("task", "separate_target_words", task.separate_target_words, "distinct target vocabulary");
  b("task", "successors", task.successors, "allowed next words per word (0 = words drawn independently)");
  b("task", "synonyms", task.synonyms, "source spellings per word, all with one translation");
  b("task", "n_bitext", task.n_bitext, "parallel training pairs");
  b("task", "n_mono", task.n_mono, "monolingual sentences per side");
  b("task", "n_dev", task.n_dev, "dev pairs");
  b("task", "n_test", task.n_test, "test pairs");
  b("task", "noisy_pairs", task.noisy_pairs, "misaligned pairs added to the bitext");
  b("task", "train_src", task.train_src, "files: training source");
  b("task", "train_tgt", task.train_tgt, "files: training target");
  b("task", "dev_src", task.dev_src, "files: dev source");
  b("task", "dev_tgt", task.dev_tgt, "files: dev target");
  b("task", "test_src", task.test_src, "files: test source");
  b("task", "test_tgt", task.test_tgt, "files: test target");
  b("task", "mono_src", task.mono_src, "files: source-side monolingual text");
  b("task", "mono_tgt", task.mono_tgt, "files: target-side monolingual text");
  b("task", "bpe_merges", task.bpe_merges, "files: joint BPE merges (0 = whitespace words)");

  b("model", "d_model", model.d_model, "model width");
  b("model", "n_heads", model.n_heads, "attention heads");
  b("model", "d_ffn", model.d_ffn, "feed-forward width");
  b("model", "layers", model.layers, "encoder and decoder layers");
  b("model", "dropout", model.dropout, "dropout rate");
  b("model", "max_len", model.max_len, "longest sequence incl. BOS/EOS");
  b("model", "tied_output", model.tied_output, "output projection shares the target embedding");
  b("model", "shared_embeddings", model.shared_embeddings, "one embedding table for both sides");
  b("model", "genotype", model.genotype, "'transformer' or a genotype text");

  b("train", "epochs", train.epochs, "epochs per training run");
  b("train", "batch_size", train.batch_size, "sentences per batch");
  b("train", "lr", train.lr, "Adam learning rate");
  b("train", "clip_norm", train.clip_norm, "gradient norm clip (0 = off)");

  b("decode", "beam", decode.beam, "beam size");
  b("decode", "length_penalty", decode.length_penalty, "score = logprob / length^lp");
  b("decode", "max_len", decode.max_len, "output cap (0 = 2*source+10)");

  b("mass", "steps", mass.steps, "pre-training steps");
  b("mass", "batch_size", mass.batch_size, "sentences per step");
  b("mass", "ratio", mass.ratio, "masked fraction");
  b("mass", "lr", mass.lr, "pre-training learning rate");

  b("madl", "agents", madl.agents, "extra agents per direction");
  b("madl", "epochs", madl.epochs, "dual-learning epochs");
  b("madl", "mono_fraction", madl.mono_fraction, "share of monolingual data decoded");
  b("madl", "refresh_every", madl.refresh_every, "re-decode every n epochs (0 = once)");
  b("madl", "lr", madl.lr, "learning rate");

  b("sca", "gamma", sca.gamma, "replacement probability");
  b("sca", "temperature", sca.temperature, "LM softmax temperature");
  b("sca", "lm_d_model", sca.lm_d_model, "LM width");
  b("sca", "lm_layers", sca.lm_layers, "LM layers");
  b("sca", "lm_epochs", sca.lm_epochs, "LM training epochs");

  b("bt", "rounds", bt.rounds, "BT/KD rounds");
  b("bt", "use_kd", bt.use_kd, "add distilled monolingual source");
  b("bt", "bitext_upsample", bt.bitext_upsample, "bitext copies in the mix");
  b("bt", "bt_upsample", bt.bt_upsample, "back-translated copies in the mix");
  b("bt", "kd_upsample", bt.kd_upsample, "distilled copies in the mix");
  b("bt", "from_scratch", bt.from_scratch, "retrain from scratch each round");
  b("bt", "p_drop", bt.p_drop, "noise: word drop probability");
  b("bt", "p_blank", bt.p_blank, "noise: word blank probability");
  b("bt", "swap_window", bt.swap_window, "noise: local shuffle window");
  b("bt", "tolerance", bt.tolerance, "BLEU drop that flags a round");

  b("finetune", "lr", finetune.lr, "clean-subset learning rate");
  b("finetune", "batch_size", finetune.batch_size, "sentences per batch");

  b("ensemble", "size", ensemble.size, "forward models in the ensemble");

  b("speculate", "max_epochs", speculate.max_epochs, "fine-tuning epochs before early stop");
  b("speculate", "lr", speculate.lr, "learning rate");

  b("nao", "pool", nao.pool, "random seed architectures");
  b("nao", "iterations", nao.iterations, "search iterations");
  b("nao", "top_k", nao.top_k, "architectures moved per iteration");
  b("nao", "eta", nao.eta, "step sizes tried on collisions");
  b("nao", "supernet_steps", nao.supernet_steps, "shared-weight training steps");
  b("nao", "eval_budget", nao.eval_budget, "extra steps per evaluated architecture");
  b("nao", "d_arch", nao.d_arch, "architecture embedding size");
  b("nao", "d_hidden", nao.d_hidden, "predictor hidden size (0 = linear)");
  b("nao", "surrogate_epochs", nao.surrogate_epochs, "surrogate epochs per iteration");
  b("nao", "train_searched", nao.train_searched, "train the best architecture standalone");

  b("rerank", "beam", rerank.beam, "n-best size");
  b("rerank", "weight_values", rerank.weight_values, "grid values per scorer weight");
  b("rerank", "length_weights", rerank.length_weights, "grid values for the length weight");
  b("rerank", "use_nao", rerank.use_nao, "use the searched model as third scorer");
}

}  // namespace nmt::app
