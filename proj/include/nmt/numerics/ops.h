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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nmt/numerics/graph.h"
#include "nmt/numerics/rng.h"

// Differentiable operations. Matrices are rank-2 [rows x cols]; rank-1
// tensors act as a single row (biases, gains). Every op checks shapes and
// throws nmt::Error on mismatch.
namespace nmt::num {

NodeId add(Graph& g, NodeId a, NodeId b);
NodeId sub(Graph& g, NodeId a, NodeId b);
NodeId mul(Graph& g, NodeId a, NodeId b);
NodeId scale(Graph& g, NodeId a, double s);
// x[n x m] + b[m] broadcast over rows.
NodeId add_bias(Graph& g, NodeId x, NodeId b);

NodeId matmul(Graph& g, NodeId a, NodeId b);
// a * b^T
NodeId matmul_bt(Graph& g, NodeId a, NodeId b);
// x W (+ b); pass an invalid NodeId to skip the bias.
NodeId linear(Graph& g, NodeId x, NodeId w, NodeId b = {});

NodeId relu(Graph& g, NodeId x);
NodeId tanh(Graph& g, NodeId x);
NodeId sigmoid(Graph& g, NodeId x);

NodeId sum(Graph& g, NodeId x);
NodeId mean(Graph& g, NodeId x);
// Column-wise mean over rows: [n x m] -> [1 x m].
NodeId mean_rows(Graph& g, NodeId x);
NodeId concat_rows(Graph& g, const std::vector<NodeId>& parts);
NodeId slice_rows(Graph& g, NodeId x, std::size_t start, std::size_t count);
// Scalar element x[r, c].
NodeId pick(Graph& g, NodeId x, std::size_t r, std::size_t c);

NodeId layer_norm(Graph& g, NodeId x, NodeId gain, NodeId bias, double eps = 1e-5);

// Multi-head scaled dot-product attention on already-projected q [n x d],
// k, v [m x d]. With `causal`, query row i sees key rows 0..i only (n == m).
NodeId attention(Graph& g, NodeId q, NodeId k, NodeId v, std::size_t heads, bool causal);

// Depthwise width-3 convolution over rows with zero padding; w [3 x d], b [d].
// Causal taps rows t-2..t, centered taps rows t-1..t+1.
NodeId depthwise_conv3(Graph& g, NodeId x, NodeId w, NodeId b, bool causal);

NodeId gather_rows(Graph& g, NodeId table, std::span<const int> ids);
// Row r is table[ids[r]] unless soft[r] holds a distribution p over rows of
// the table, in which case it is sum_j p_j table[j].
NodeId soft_gather_rows(Graph& g, NodeId table, std::span<const int> ids,
                        const std::vector<std::optional<std::vector<double>>>& soft);

// Inverted dropout; identity when p == 0.
NodeId dropout(Graph& g, NodeId x, double p, Rng& rng);

NodeId log_softmax_rows(Graph& g, NodeId x);
// Mean over rows of -log softmax(logits)[row, target[row]].
NodeId softmax_cross_entropy(Graph& g, NodeId logits, std::span<const int> targets);
// Same as above but summed instead of averaged.
NodeId nll_sum(Graph& g, NodeId logits, std::span<const int> targets);
// (x - target)^2 for a single-element x.
NodeId squared_error(Graph& g, NodeId x, double target);

// Plain row-wise log-softmax on raw values (no graph).
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace nmt::num
