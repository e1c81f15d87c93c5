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

#include <benchmark/benchmark.h>

#include <vector>

#include "nmt/numerics/kernels.h"
#include "nmt/numerics/rng.h"

namespace k = nmt::num::kernels;

namespace {

struct Operands {
  std::vector<double> a, b, c;
  Operands(std::size_t n, std::size_t kk, std::size_t m) : a(n * kk), b(kk * m), c(n * m) {
    nmt::num::Rng rng(42, 0);
    for (auto& x : a) x = rng.uniform() - 0.5;
    for (auto& x : b) x = rng.uniform() - 0.5;
  }
};

using Kernel = void (*)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t, bool);

void run(benchmark::State& state, Kernel f) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto kk = static_cast<std::size_t>(state.range(1));
  const auto m = static_cast<std::size_t>(state.range(2));
  Operands op(n, kk, m);
  for (auto _ : state) {
    f(op.a.data(), op.b.data(), op.c.data(), n, kk, m, false);
    benchmark::DoNotOptimize(op.c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * kk * m));
  state.counters["threads"] = k::max_threads();
}

// rows x inner x cols: a projection, an FFN layer, a vocabulary readout, a square block
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 64, 64})->Args({256, 64, 128})->Args({256, 128, 64})->Args({256, 64, 1000})->Args({512, 512, 512});
}

}  // namespace

static void BM_matmul_omp(benchmark::State& s) { run(s, k::matmul); }
static void BM_matmul_serial(benchmark::State& s) { run(s, k::serial::matmul); }
static void BM_matmul_bt_omp(benchmark::State& s) { run(s, k::matmul_bt); }
static void BM_matmul_bt_serial(benchmark::State& s) { run(s, k::serial::matmul_bt); }
static void BM_matmul_at_omp(benchmark::State& s) { run(s, k::matmul_at); }
static void BM_matmul_at_serial(benchmark::State& s) { run(s, k::serial::matmul_at); }

BENCHMARK(BM_matmul_omp)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_matmul_serial)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_matmul_bt_omp)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_matmul_bt_serial)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_matmul_at_omp)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_matmul_at_serial)->Apply(shapes)->UseRealTime();

BENCHMARK_MAIN();
