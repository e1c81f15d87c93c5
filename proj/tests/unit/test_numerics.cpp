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

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "grad_util.h"
#include "nmt/error.h"
#include "nmt/numerics/adam.h"
#include "nmt/numerics/checkpoint.h"
#include "nmt/numerics/gradcheck.h"
#include "nmt/numerics/kernels.h"
#include "nmt/numerics/ops.h"

using namespace nmt;
using namespace nmt::num;
using nmt::testing::gradient_error;
using nmt::testing::random_matrix;

TEST_CASE("backward of x*x at 3 is 6") {
  ParamStore store;
  Parameter& x = store.add("x", Tensor::scalar(3.0));
  Graph g;
  NodeId xn = g.parameter(x);
  NodeId y = mul(g, xn, xn);
  GradientMap grads = backward(g, y);
  REQUIRE(grads.size() == 1);
  CHECK(grads.at(&x)[0] == doctest::Approx(6.0));
}

TEST_CASE("constant output yields an empty gradient map") {
  ParamStore store;
  Parameter& c = store.add("c", Tensor::scalar(2.5), false);
  Graph g;
  GradientMap grads = backward(g, g.parameter(c));
  CHECK(grads.empty());
}

TEST_CASE("unused parameters receive zero gradients") {
  ParamStore store;
  Parameter& a = store.add("a", Tensor::scalar(2.0));
  Parameter& b = store.add("b", Tensor::scalar(5.0));
  Graph g;
  NodeId an = g.parameter(a);
  g.parameter(b);
  GradientMap grads = backward(g, scale(g, an, 3.0));
  CHECK(grads.at(&a)[0] == 3.0);
  CHECK(grads.at(&b)[0] == 0.0);
}

TEST_CASE("backward rejects non-scalar outputs and names non-finite nodes") {
  ParamStore store;
  Parameter& w = store.add("w", Tensor::matrix(2, 2, 1.0));
  Graph g;
  NodeId wn = g.parameter(w);
  CHECK_THROWS_AS(backward(g, wn), Error);

  Parameter& big = store.add("big", Tensor::scalar(1e300));
  Graph g2;
  NodeId b = g2.parameter(big);
  try {
    mul(g2, b, b);
    FAIL("expected a NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("mul") != std::string::npos);
  }
}

TEST_CASE("two-layer matmul chain matches central differences") {
  Rng rng(11);
  ParamStore store;
  Parameter& w1 = store.add("w1", random_matrix(rng, 4, 4, 0.5));
  Parameter& w2 = store.add("w2", random_matrix(rng, 4, 4, 0.5));
  const Tensor x = random_matrix(rng, 4, 4);
  auto build = [&](Graph& g) {
    NodeId h = tanh(g, matmul(g, g.constant(x), g.parameter(w1)));
    NodeId o = tanh(g, matmul(g, h, g.parameter(w2)));
    return sum(g, mul(g, o, o));
  };
  CHECK(gradient_error(store, build) < 1e-6);
}

TEST_CASE("finite_difference_grad basics") {
  ParamStore store;
  Parameter& x = store.add("x", Tensor::vector({1.0, 2.0}));
  std::vector<Parameter*> ps{&x};
  auto sq = [&] { return x.value[0] * x.value[0] + x.value[1] * x.value[1]; };
  GradientMap g = finite_difference_grad(sq, ps, 1e-5);
  CHECK(std::abs(g.at(&x)[0] - 2.0) < 1e-8);
  CHECK(std::abs(g.at(&x)[1] - 4.0) < 1e-8);
  CHECK(x.value[0] == 1.0);

  GradientMap zero = finite_difference_grad([] { return 7.0; }, ps, 1e-5);
  CHECK(zero.at(&x)[0] == 0.0);
  CHECK(zero.at(&x)[1] == 0.0);
  CHECK_THROWS_AS(finite_difference_grad(sq, ps, 0.0), Error);
  CHECK_THROWS_AS(finite_difference_grad(sq, ps, -1.0), Error);
}

TEST_CASE("softmax_cross_entropy values") {
  Graph g(false);
  std::vector<int> t{2};
  NodeId uniform = softmax_cross_entropy(g, g.constant(Tensor::matrix(1, 4, 0.3)), t);
  CHECK(g.value(uniform).item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  NodeId sat = softmax_cross_entropy(g, g.constant(Tensor({1, 3}, {0.0, 0.0, 20.0})), t);
  CHECK(g.value(sat).item() < 1e-8);
  CHECK_THROWS_AS(softmax_cross_entropy(g, g.constant(Tensor::matrix(1, 4)), std::vector<int>{4}), Error);

  // Two-step reference: explicit softmax, then log, then mean.
  Rng rng(5);
  Tensor logits = random_matrix(rng, 3, 5, 2.0);
  std::vector<int> targets{1, 4, 0};
  double ref = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < 5; ++j) z += std::exp(logits.at(i, j));
    const double p = std::exp(logits.at(i, static_cast<std::size_t>(targets[i]))) / z;
    ref += -std::log(p);
  }
  ref /= 3.0;
  CHECK(g.value(softmax_cross_entropy(g, g.constant(logits), targets)).item() == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("every differentiable op matches finite differences") {
  Rng rng(2024);
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t n = 2 + rng.index(3), d = 4, m = 2 + rng.index(3);
    ParamStore s;
    Parameter& a = s.add("a", random_matrix(rng, n, d));
    Parameter& b = s.add("b", random_matrix(rng, n, d));
    Parameter& w = s.add("w", random_matrix(rng, d, m, 0.5));
    Parameter& kv = s.add("kv", random_matrix(rng, m, d));
    Parameter& bias = s.add("bias", Tensor::vector({0.1, -0.2, 0.3, 0.05}));
    Parameter& gain = s.add("gain", Tensor::vector({1.1, 0.9, 1.3, 0.7}));
    Parameter& conv = s.add("conv", random_matrix(rng, 3, d, 0.5));
    Parameter& table = s.add("table", random_matrix(rng, 6, d));
    std::vector<int> ids{1, 5, 1, 0};
    std::vector<std::optional<std::vector<double>>> soft(4);
    soft[2] = std::vector<double>{0.1, 0.2, 0.3, 0.1, 0.2, 0.1};
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = static_cast<int>(rng.index(m));
    const Tensor weights = random_matrix(rng, n, d);

    auto weighted = [&](Graph& g, NodeId x) {
      const Tensor& v = g.value(x);
      Tensor wt(v.shape());
      for (std::size_t i = 0; i < wt.size(); ++i) wt[i] = std::sin(1.0 + static_cast<double>(i));
      return sum(g, mul(g, x, g.constant(wt)));
    };
    auto P = [](Graph& g, Parameter& p) { return g.parameter(p); };

    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, add(g, P(g, a), P(g, b))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, sub(g, P(g, a), P(g, b))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, mul(g, P(g, a), P(g, b))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, scale(g, P(g, a), -1.7)); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, add_bias(g, P(g, a), P(g, bias))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, linear(g, P(g, a), P(g, w))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, matmul_bt(g, P(g, a), P(g, kv))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, relu(g, P(g, a))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, tanh(g, P(g, a))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, sigmoid(g, P(g, a))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return mean(g, mul(g, P(g, a), P(g, a))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, mean_rows(g, P(g, a))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, concat_rows(g, {P(g, a), P(g, kv), P(g, a)})); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, slice_rows(g, P(g, a), 1, n - 1)); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return mul(g, pick(g, P(g, a), 1, 2), pick(g, P(g, b), 0, 3)); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, layer_norm(g, P(g, a), P(g, gain), P(g, bias))); }) < 1e-4);
    for (bool causal : {false, true}) {
      CHECK(gradient_error(s, [&](Graph& g) {
              NodeId kvn = causal ? P(g, b) : P(g, kv);
              return weighted(g, attention(g, P(g, a), kvn, kvn, 2, causal));
            }) < 1e-4);
      CHECK(gradient_error(s, [&](Graph& g) {
              return weighted(g, depthwise_conv3(g, P(g, a), P(g, conv), P(g, bias), causal));
            }) < 1e-4);
    }
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, gather_rows(g, P(g, table), ids)); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, soft_gather_rows(g, P(g, table), ids, soft)); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) {
            Rng drop(77);
            return weighted(g, dropout(g, P(g, a), 0.3, drop));
          }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return weighted(g, log_softmax_rows(g, P(g, a))); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return softmax_cross_entropy(g, linear(g, P(g, a), P(g, w)), targets); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return nll_sum(g, linear(g, P(g, a), P(g, w)), targets); }) < 1e-4);
    CHECK(gradient_error(s, [&](Graph& g) { return squared_error(g, pick(g, P(g, a), 0, 0), 0.25); }) < 1e-4);
    (void)weights;
  }
}

TEST_CASE("backward is linear in the loss") {
  Rng rng(3);
  ParamStore s;
  Parameter& w = s.add("w", random_matrix(rng, 3, 3));
  const Tensor x = random_matrix(rng, 2, 3);
  auto loss1 = [&](Graph& g) { return sum(g, tanh(g, matmul(g, g.constant(x), g.parameter(w)))); };
  auto loss2 = [&](Graph& g) { return mean(g, mul(g, g.parameter(w), g.parameter(w))); };
  Graph g1, g2, g3;
  GradientMap a = backward(g1, loss1(g1));
  GradientMap b = backward(g2, loss2(g2));
  GradientMap both = backward(g3, add(g3, loss1(g3), loss2(g3)));
  GradientMap summed = add_gradients(a, b);
  for (std::size_t i = 0; i < w.value.size(); ++i) {
    CHECK(both.at(&w)[i] == doctest::Approx(summed.at(&w)[i]).epsilon(1e-14));
  }
}

TEST_CASE("computation is deterministic given a seed") {
  auto run = [] {
    Rng rng(99);
    Tensor a = random_matrix(rng, 5, 7);
    Tensor b = random_matrix(rng, 7, 3);
    Graph g(false);
    Rng drop(4);
    NodeId o = dropout(g, tanh(g, matmul(g, g.constant(a), g.constant(b))), 0.2, drop);
    return g.value(o);
  };
  CHECK(run() == run());
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  Rng rng(8);
  for (auto [n, k, m] : {std::tuple<std::size_t, std::size_t, std::size_t>{3, 5, 7}, {64, 48, 80}, {1, 200, 1}}) {
    Tensor a = random_matrix(rng, n, k), b = random_matrix(rng, k, m), bt = random_matrix(rng, m, k);
    Tensor c = random_matrix(rng, n, m);
    for (bool acc : {false, true}) {
      Tensor p1 = c, s1 = c;
      kernels::matmul(a.data(), b.data(), p1.data(), n, k, m, acc);
      kernels::serial::matmul(a.data(), b.data(), s1.data(), n, k, m, acc);
      CHECK(p1 == s1);
      Tensor p2 = c, s2 = c;
      kernels::matmul_bt(a.data(), bt.data(), p2.data(), n, k, m, acc);
      kernels::serial::matmul_bt(a.data(), bt.data(), s2.data(), n, k, m, acc);
      CHECK(p2 == s2);
      Tensor p3(Shape{k, m}), s3(Shape{k, m});
      kernels::matmul_at(a.data(), c.data(), p3.data(), n, k, m, acc);
      kernels::serial::matmul_at(a.data(), c.data(), s3.data(), n, k, m, acc);
      CHECK(p3 == s3);
    }
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(1);
  ParamStore s;
  s.add("emb", random_matrix(rng, 4, 3));
  s.add("bias", Tensor::vector({-0.0, 1e-310, 3.5}));
  s.add("scalar", Tensor::scalar(-2.25));
  Checkpoint ck = params_to_checkpoint(s);
  ck.metadata["role"] = "test";
  const std::string bytes = encode_checkpoint(ck);
  Checkpoint back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(back.meta("role") == "test");
  ParamStore t = s;
  for (std::size_t i = 0; i < t.size(); ++i) t[i].value.fill(0.0);
  load_params(t, back);
  CHECK(t.fingerprint() == s.fingerprint());
  double negzero = t.at("bias").value[0];
  std::uint64_t bits;
  std::memcpy(&bits, &negzero, 8);
  CHECK(bits == 0x8000000000000000ULL);

  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  std::string bad = bytes;
  bad[8] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad), Error);
}

TEST_CASE("adam minimises a quadratic") {
  ParamStore s;
  Parameter& x = s.add("x", Tensor::vector({3.0, -2.0}));
  Adam opt(AdamConfig{.lr = 0.1});
  for (int i = 0; i < 300; ++i) {
    Graph g;
    NodeId xn = g.parameter(x);
    opt.step(s, backward(g, sum(g, mul(g, xn, xn))));
  }
  CHECK(std::abs(x.value[0]) < 1e-2);
  CHECK(std::abs(x.value[1]) < 1e-2);
}

TEST_CASE("rng streams are replayable and split independently") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = a.split(1), d = a.split(2);
  CHECK(c.next_u64() != d.next_u64());
  Rng e(42);
  std::vector<int> counts(5);
  for (int i = 0; i < 50000; ++i) counts[e.index(5)]++;
  for (int v : counts) CHECK(std::abs(v - 10000) < 500);
}
