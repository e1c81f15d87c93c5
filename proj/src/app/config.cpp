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

#include "nmt/app/config.h"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nmt/seq2seq/genotype.h"

namespace nmt::app {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t parse_unsigned(const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument("");
  return std::stoull(v);
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument("");
  return d;
}

void parse_into(const std::string& v, std::size_t& f) { f = parse_unsigned(v); }
void parse_into(const std::string& v, double& f) { f = parse_double(v); }
void parse_into(const std::string& v, std::string& f) { f = v; }
void parse_into(const std::string& v, std::vector<std::string>& f) { f = split_list(v); }
void parse_into(const std::string& v, bool& f) {
  if (v == "true" || v == "yes" || v == "1") {
    f = true;
  } else if (v == "false" || v == "no" || v == "0") {
    f = false;
  } else {
    throw std::invalid_argument("");
  }
}
void parse_into(const std::string& v, std::vector<double>& f) {
  f.clear();
  for (const auto& s : split_list(v)) f.push_back(parse_double(s));
}

const char* type_name(const std::size_t&) { return "a non-negative integer"; }
const char* type_name(const double&) { return "a number"; }
const char* type_name(const std::string&) { return "a string"; }
const char* type_name(const bool&) { return "true or false"; }
const char* type_name(const std::vector<std::string>&) { return "a comma-separated list"; }
const char* type_name(const std::vector<double>&) { return "a comma-separated list of numbers"; }

std::string show(std::size_t v) { return std::to_string(v); }
std::string show(double v) { return fmt::format("{}", v); }
std::string show(const std::string& v) { return v; }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::vector<std::string>& v) { return fmt::format("{}", fmt::join(v, ", ")); }
std::string show(const std::vector<double>& v) {
  std::vector<std::string> s;
  for (double d : v) s.push_back(show(d));
  return show(s);
}

struct Reader {
  const pt::ptree& tree;
  std::set<std::string> bound;
  template <typename T>
  void operator()(const char* section, const char* key, T& field, const char*) {
    const std::string path = std::string(section) + "." + key;
    bound.insert(path);
    const auto sec = tree.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return;
    const auto val = sec->get_child_optional(pt::ptree::path_type(key, '\0'));
    if (!val) return;
    try {
      parse_into(trim(val->data()), field);
    } catch (const std::exception&) {
      throw SchemaError(path, fmt::format("expected {}, got '{}'", type_name(field), val->data()));
    }
  }
};

struct Writer {
  std::ostringstream out;
  std::string current;
  template <typename T>
  void operator()(const char* section, const char* key, T& field, const char*) {
    if (current != section) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << key << " = " << show(field) << '\n';
  }
};

struct Documenter {
  std::ostringstream out;
  template <typename T>
  void operator()(const char* section, const char* key, T& field, const char* help) {
    out << "| `" << section << '.' << key << "` | " << type_name(field) << " | `" << show(field) << "` | " << help
        << " |\n";
  }
};

void validate(const ExperimentConfig& c) {
  if (c.run.stages.empty()) throw SchemaError("run.stages", "at least one stage is required");
  for (const auto& s : c.run.stages) {
    if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end()) {
      throw SchemaError("run.stages", fmt::format("unknown stage '{}' (known: {})", s, fmt::join(known_stages(), ", ")));
    }
  }
  if (c.run.name.empty()) throw SchemaError("run.name", "must not be empty");
  static const std::set<std::string> kinds{"copy", "reverse", "number-words", "files"};
  if (!kinds.count(c.task.kind)) throw SchemaError("task.kind", "must be copy, reverse, number-words or files");
  if (c.task.kind == "files") {
    for (auto [k, v] : {std::pair{"train_src", &c.task.train_src}, {"train_tgt", &c.task.train_tgt},
                        {"dev_src", &c.task.dev_src}, {"dev_tgt", &c.task.dev_tgt}}) {
      if (v->empty()) throw SchemaError(std::string("task.") + k, "required when kind = files");
    }
  }
  if (c.task.min_len < 1 || c.task.min_len > c.task.max_len) throw SchemaError("task.min_len", "need 1 <= min_len <= max_len");
  if (c.task.synonyms == 0) throw SchemaError("task.synonyms", "must be positive");
  if (c.task.synonyms > 1 && !c.task.separate_target_words) {
    throw SchemaError("task.synonyms", "needs task.separate_target_words");
  }
  if (c.task.successors > c.task.words) throw SchemaError("task.successors", "must not exceed task.words");
  if (c.task.kind != "files" && c.task.n_bitext == 0) throw SchemaError("task.n_bitext", "must be positive");
  if (c.task.n_dev == 0) throw SchemaError("task.n_dev", "must be positive");
  if (c.model.d_model == 0 || c.model.n_heads == 0 || c.model.d_model % c.model.n_heads != 0) {
    throw SchemaError("model.n_heads", "must divide d_model");
  }
  if (c.model.layers == 0) throw SchemaError("model.layers", "must be positive");
  if (c.model.dropout < 0 || c.model.dropout >= 1) throw SchemaError("model.dropout", "must be in [0, 1)");
  if (c.model.genotype != "transformer") {
    try {
      const Genotype g = genotype_from_text(c.model.genotype);
      if (g.layers() != c.model.layers) throw GenotypeError("genotype depth differs from model.layers");
    } catch (const Error& e) {
      throw SchemaError("model.genotype", e.what());
    }
  }
  if (c.train.batch_size == 0) throw SchemaError("train.batch_size", "must be positive");
  if (c.train.lr <= 0) throw SchemaError("train.lr", "must be positive");
  if (c.decode.beam == 0) throw SchemaError("decode.beam", "must be positive");
  if (c.mass.ratio <= 0 || c.mass.ratio >= 1) throw SchemaError("mass.ratio", "must be in (0, 1)");
  if (c.madl.mono_fraction < 0 || c.madl.mono_fraction > 1) throw SchemaError("madl.mono_fraction", "must be in [0, 1]");
  if (c.sca.gamma < 0 || c.sca.gamma > 1) throw SchemaError("sca.gamma", "must be in [0, 1]");
  if (c.sca.temperature <= 0) throw SchemaError("sca.temperature", "must be positive");
  if (c.bt.rounds == 0) throw SchemaError("bt.rounds", "must be positive");
  for (auto [k, v] : {std::pair{"bitext_upsample", c.bt.bitext_upsample}, {"bt_upsample", c.bt.bt_upsample},
                      {"kd_upsample", c.bt.kd_upsample}}) {
    if (v == 0) throw SchemaError(std::string("bt.") + k, "must be >= 1");
  }
  if (c.bt.p_drop < 0 || c.bt.p_drop > 1) throw SchemaError("bt.p_drop", "must be in [0, 1]");
  if (c.bt.p_blank < 0 || c.bt.p_blank > 1) throw SchemaError("bt.p_blank", "must be in [0, 1]");
  if (c.ensemble.size == 0) throw SchemaError("ensemble.size", "must be positive");
  if (c.nao.pool < 2) throw SchemaError("nao.pool", "must be at least 2");
  if (c.nao.eta.empty()) throw SchemaError("nao.eta", "needs at least one step size");
  for (double e : c.nao.eta) {
    if (e < 0) throw SchemaError("nao.eta", "step sizes must be >= 0");
  }
  if (c.rerank.beam == 0) throw SchemaError("rerank.beam", "must be positive");
  if (c.rerank.weight_values.empty()) throw SchemaError("rerank.weight_values", "must not be empty");
  if (c.rerank.length_weights.empty()) throw SchemaError("rerank.length_weights", "must not be empty");
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SchemaError("line " + std::to_string(e.line()), e.message());
  }
  ExperimentConfig cfg;
  Reader r{tree, {}};
  cfg.bind(r);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw SchemaError(section, "key outside any section");
    bool known_section = false;
    for (const auto& b : r.bound) known_section |= b.rfind(section + ".", 0) == 0;
    if (!known_section) throw SchemaError(section, "unknown section");
    for (const auto& [key, value] : body) {
      if (!r.bound.count(section + "." + key)) throw SchemaError(section + "." + key, "unknown key");
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

std::string to_text(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  Writer w;
  copy.bind(w);
  return w.out.str();
}

std::string schema_markdown() {
  ExperimentConfig defaults;
  Documenter d;
  d.out << "| key | type | default | meaning |\n|---|---|---|---|\n";
  defaults.bind(d);
  return d.out.str();
}

std::filesystem::path output_root() {
  const char* env = std::getenv("NMT_OUTPUT_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

}  // namespace nmt::app
