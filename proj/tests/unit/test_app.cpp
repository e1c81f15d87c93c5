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

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nmt/app/config.h"
#include "nmt/app/gradsuite.h"
#include "nmt/app/runner.h"

using namespace nmt;
using namespace nmt::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string schema_path(const std::string& text) {
  try {
    parse_experiment(text);
  } catch (const SchemaError& e) {
    return e.path();
  }
  return "";
}

const char* kTiny = R"(
[run]
name = tiny
seed = 5
stages = baseline, finetune, sca

[task]
kind = reverse
words = 6
min_len = 2
max_len = 4
n_bitext = 60
n_dev = 10
n_test = 10
noisy_pairs = 10

[model]
d_model = 8
n_heads = 2
d_ffn = 16
layers = 1
dropout = 0.1
max_len = 12

[train]
epochs = 2

[decode]
beam = 2

[sca]
lm_d_model = 8
lm_epochs = 1
)";

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto cfg = parse_experiment("[model]\nd_model = 32\n[nao]\neta = 0.5, 1\n[run]\nstages = baseline,bt\n");
  CHECK(cfg.model.d_model == 32);
  CHECK(cfg.model.n_heads == 4);
  CHECK(cfg.nao.eta == std::vector<double>{0.5, 1.0});
  CHECK(cfg.run.stages == std::vector<std::string>{"baseline", "bt"});
  CHECK(parse_experiment("").model.d_model == 64);
}

TEST_CASE("config errors name the field") {
  CHECK(schema_path("[model]\nd_modle = 3\n") == "model.d_modle");
  CHECK(schema_path("[modle]\nd_model = 3\n") == "modle");
  CHECK(schema_path("[model]\nd_model = wide\n") == "model.d_model");
  CHECK(schema_path("[model]\nd_model = -4\n") == "model.d_model");
  CHECK(schema_path("[model]\ntied_output = maybe\n") == "model.tied_output");
  CHECK(schema_path("[run]\nstages = baseline, warp\n") == "run.stages");
  CHECK(schema_path("[model]\nd_model = 30\nn_heads = 4\n") == "model.n_heads");
  CHECK(schema_path("[sca]\ngamma = 1.5\n") == "sca.gamma");
  CHECK(schema_path("[model]\ngenotype = E:nonsense\n") == "model.genotype");
  const std::string line = schema_path("[model\nd_model = 3\n");
  CHECK(line.find("line") != std::string::npos);
}

TEST_CASE("canonical text round trips") {
  auto cfg = parse_experiment(kTiny);
  const std::string text = to_text(cfg);
  CHECK(to_text(parse_experiment(text)) == text);
  CHECK(to_text(parse_experiment("")) == to_text(ExperimentConfig{}));
  CHECK(text.find("[rerank]") != std::string::npos);
}

TEST_CASE("schema lists every key") {
  const std::string md = schema_markdown();
  ExperimentConfig cfg;
  std::size_t rows = 0;
  auto count = [&](const std::string& s, const std::string& k, auto&, const char*) {
    ++rows;
    CHECK(md.find("`" + s + "." + k + "`") != std::string::npos);
  };
  cfg.bind(count);
  CHECK(rows > 60);
}

TEST_CASE("output root follows the environment") {
  setenv("NMT_OUTPUT_ROOT", "/tmp/somewhere", 1);
  CHECK(output_root() == fs::path("/tmp/somewhere"));
  unsetenv("NMT_OUTPUT_ROOT");
  CHECK(output_root() == fs::path("runs"));
}

TEST_CASE("score tables") {
  const std::vector<ScoreRow> rows{{"baseline", "Baseline", 12.345, 6.7}, {"bt", "+BT", 20, 19.999}};
  CHECK(scores_tsv(rows) == "stage\tsystem\tdev_bleu\ttest_bleu\nbaseline\tBaseline\t12.35\t6.70\nbt\t+BT\t20.00\t20.00\n");
  const std::string md = scores_markdown("t", rows);
  CHECK(md.find("| +BT | 20.00 | 20.00 |") != std::string::npos);
}

TEST_CASE("a run replays byte for byte") {
  const fs::path a = fs::temp_directory_path() / "desknmt_test_run_a";
  const fs::path b = fs::temp_directory_path() / "desknmt_test_run_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const auto cfg = parse_experiment(kTiny);
  const auto ra = run_experiment(cfg, a);
  const auto rb = run_experiment(cfg, b);
  REQUIRE(ra.rows.size() == 3);
  CHECK(slurp(a / "scores.tsv") == slurp(b / "scores.tsv"));
  CHECK(slurp(a / "checkpoints" / "finetune.fwd.ckpt") == slurp(b / "checkpoints" / "finetune.fwd.ckpt"));
  CHECK(slurp(a / "config.ini") == to_text(cfg));
  CHECK(fs::exists(a / "corpora" / "train.src"));

  auto other = cfg;
  other.run.seed = 6;
  const fs::path c = fs::temp_directory_path() / "desknmt_test_run_c";
  fs::remove_all(c);
  run_experiment(other, c);
  CHECK(slurp(a / "checkpoints" / "baseline.fwd.ckpt") != slurp(c / "checkpoints" / "baseline.fwd.ckpt"));
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("stage preconditions") {
  auto cfg = parse_experiment(kTiny);
  cfg.run.stages = {"mass"};
  const fs::path d = fs::temp_directory_path() / "desknmt_test_run_d";
  fs::remove_all(d);
  try {
    run_experiment(cfg, d);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "mass");
  }
  cfg.run.stages = {"finetune"};
  CHECK_THROWS_AS(run_experiment(cfg, d), StageError);
  fs::remove_all(d);
}

TEST_CASE("gradient suite") {
  const auto checks = run_gradient_suite(11);
  CHECK(checks.size() >= 6);
  for (const auto& c : checks) {
    INFO(c.name);
    CHECK(c.pass);
    CHECK(c.params <= 2000);
    CHECK(c.max_rel_error < 1e-4);
  }
}
