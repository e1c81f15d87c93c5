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

#include "nmt/nao/search.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "nmt/eval/bleu.h"

namespace nmt::nao {

void train_supernet(Model& supernet, const std::vector<SentencePair>& data, std::size_t steps,
                    std::size_t batch_size, num::Adam& adam, num::Rng& rng) {
  if (!supernet.is_supernet()) throw Error("train_supernet needs a supernet");
  if (steps == 0) return;
  if (data.empty() || batch_size == 0) throw Error("supernet training needs data and a positive batch size");
  const Genotype active = supernet.genotype();
  std::vector<SentencePair> batch(batch_size);
  for (std::size_t s = 0; s < steps; ++s) {
    supernet.set_genotype(random_genotype(supernet.config().layers, rng));
    for (auto& p : batch) p = data[rng.index(data.size())];
    train_step(supernet, adam, batch, rng);
  }
  supernet.set_genotype(active);
}

PerfRecord shared_weight_eval(const Model& supernet, const Genotype& genotype, const std::vector<SentencePair>& train,
                              const std::vector<SentencePair>& dev, const EvalConfig& cfg, std::uint64_t seed) {
  if (dev.empty()) throw Error("shared-weight evaluation needs a dev set");
  Model m = supernet;
  if (cfg.budget > 0) {
    num::Adam adam(cfg.adam);
    num::Rng rng(seed, 0xe7a1);
    train_supernet(m, train, cfg.budget, cfg.batch_size, adam, rng);
  }
  m.set_genotype(genotype);
  std::vector<TokenSequence> src, ref;
  for (const auto& p : dev) src.push_back(p.src), ref.push_back(p.tgt);
  const double bleu = eval::corpus_bleu(translate_all(m, src, cfg.beam), ref);
  return {genotype, bleu / 100.0, seed, cfg.budget, 0};
}

void write_record(std::ostream& out, const PerfRecord& r) {
  out << r.iteration << '\t' << fmt::format("{:.17g}", r.y) << '\t' << r.seed << '\t' << r.budget << '\t'
      << to_text(r.genotype) << '\n';
}

ArchiveFile read_archive(std::istream& in) {
  ArchiveFile out;
  std::vector<PerfRecord> pending;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) { return Error("archive line " + std::to_string(lineno) + ": " + why); };
    if (line.rfind("#done", 0) == 0) {
      std::size_t it = 0;
      try {
        it = std::stoul(line.substr(5));
      } catch (const std::exception&) {
        throw fail("bad #done marker");
      }
      if (it != out.completed) throw fail("iteration " + std::to_string(it) + " completed out of order");
      for (auto& r : pending) {
        if (r.iteration != it) throw fail("record of iteration " + std::to_string(r.iteration) + " inside iteration " + std::to_string(it));
      }
      out.records.insert(out.records.end(), pending.begin(), pending.end());
      pending.clear();
      ++out.completed;
      continue;
    }
    std::istringstream ls(line);
    std::string it, y, seed, budget, gen;
    if (!std::getline(ls, it, '\t') || !std::getline(ls, y, '\t') || !std::getline(ls, seed, '\t') ||
        !std::getline(ls, budget, '\t') || !std::getline(ls, gen)) {
      throw fail("expected 5 tab-separated fields");
    }
    PerfRecord r;
    try {
      std::size_t used = 0;
      r.iteration = std::stoul(it);
      r.y = std::stod(y, &used);
      if (used != y.size()) throw std::invalid_argument("score");
      r.seed = std::stoull(seed);
      r.budget = std::stoul(budget);
    } catch (const std::exception&) {
      throw fail("bad numeric field");
    }
    try {
      r.genotype = genotype_from_text(gen);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    pending.push_back(std::move(r));
  }
  if (!pending.empty()) spdlog::warn("archive: dropping {} records of an unfinished iteration", pending.size());
  return out;
}

namespace {

std::uint64_t eval_seed(std::uint64_t seed, std::size_t iteration, std::size_t index) {
  return num::Rng(seed, (static_cast<std::uint64_t>(iteration) << 32) | index).next_u64();
}

std::vector<PerfRecord> evaluate(const Model& supernet, const std::vector<Genotype>& gens,
                                 const std::vector<SentencePair>& train, const std::vector<SentencePair>& dev,
                                 const EvalConfig& cfg, std::uint64_t seed, std::size_t iteration) {
  std::vector<PerfRecord> out(gens.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < gens.size(); ++i) {
    try {
      out[i] = shared_weight_eval(supernet, gens[i], train, dev, cfg, eval_seed(seed, iteration, i));
      out[i].iteration = iteration;
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace

SearchResult nao_search(const ModelConfig& model, const std::vector<SentencePair>& train,
                        const std::vector<SentencePair>& dev, const SearchConfig& cfg, std::uint64_t seed,
                        const std::optional<std::filesystem::path>& archive_path) {
  if (cfg.pool < 2) throw Error("search pool must hold at least 2 architectures");
  if (cfg.eta_schedule.empty()) throw Error("eta schedule is empty");
  SurrogateConfig scfg = cfg.surrogate;
  scfg.layers = model.layers;

  SearchResult res{{}, {}, Model::supernet(model, seed)};
  {
    num::Adam adam(cfg.supernet_adam);
    num::Rng rng(seed, 0x5b);
    train_supernet(res.supernet, train, cfg.supernet_steps, cfg.batch_size, adam, rng);
  }

  ArchiveFile prior;
  if (archive_path && std::filesystem::exists(*archive_path)) {
    std::ifstream in(*archive_path);
    prior = read_archive(in);
  }
  std::ofstream file;
  if (archive_path) {
    if (archive_path->has_parent_path()) std::filesystem::create_directories(archive_path->parent_path());
    file.open(*archive_path, std::ios::trunc);
    if (!file) throw Error("cannot write archive " + archive_path->string());
  }
  std::vector<PerfRecord> archive;
  std::set<std::string> seen;
  auto commit = [&](const std::vector<PerfRecord>& recs, std::size_t it) {
    for (const auto& r : recs) {
      archive.push_back(r);
      seen.insert(to_text(r.genotype));
      if (file.is_open()) write_record(file, r);
    }
    if (file.is_open()) file << "#done " << it << '\n' << std::flush;
    double best = res.best_so_far.empty() ? 0.0 : res.best_so_far.back();
    for (const auto& r : recs) best = std::max(best, r.y);
    res.best_so_far.push_back(best);
  };
  const std::size_t total = cfg.iterations + 1;
  for (std::size_t it = 0; it < std::min(prior.completed, total); ++it) {
    std::vector<PerfRecord> recs;
    for (const auto& r : prior.records) {
      if (r.iteration == it) recs.push_back(r);
    }
    commit(recs, it);
  }

  for (std::size_t it = res.best_so_far.size(); it < total; ++it) {
    std::vector<Genotype> fresh;
    if (it == 0) {
      num::Rng rng(seed, 0x9001);
      std::set<std::string> pool;
      for (std::size_t tries = 0; fresh.size() < cfg.pool && tries < 100 * cfg.pool; ++tries) {
        Genotype g = random_genotype(model.layers, rng);
        if (pool.insert(to_text(g)).second) fresh.push_back(std::move(g));
      }
    } else {
      Surrogate s(scfg, seed + it);
      std::vector<ArchExample> data;
      for (const auto& r : archive) data.push_back({encode_genotype(r.genotype), r.y});
      num::Rng rng(seed, 0x5a000 + it);
      const auto loss = fit_surrogate(s, data, cfg.surrogate_train, rng);
      spdlog::info("nao iteration {}: surrogate mse {:.5f} recon {:.4f}", it, loss.mse, loss.recon);

      std::vector<std::size_t> order(archive.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return archive[a].y > archive[b].y; });
      std::set<std::string> taken = seen;
      for (std::size_t k = 0; k < std::min(cfg.top_k, order.size()); ++k) {
        const ArchEmbedding e = s.encode(encode_genotype(archive[order[k]].genotype));
        bool found = false;
        for (double eta : cfg.eta_schedule) {
          Genotype g = decode_genotype(s.decode(ascend(s, e, eta)), model.layers);
          if (taken.insert(to_text(g)).second) {
            fresh.push_back(std::move(g));
            found = true;
            break;
          }
        }
        if (!found) spdlog::warn("nao iteration {}: every step size decoded a known architecture for seed {}", it, k);
      }
    }
    commit(evaluate(res.supernet, fresh, train, dev, cfg.eval, seed, it), it);
  }

  res.archive = archive;
  std::stable_sort(res.archive.begin(), res.archive.end(), [](const PerfRecord& a, const PerfRecord& b) { return a.y > b.y; });
  return res;
}

}  // namespace nmt::nao
