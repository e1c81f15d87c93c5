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

#include "nmt/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nmt/error.h"
#include "nmt/numerics/kernels.h"

namespace nmt::num {

namespace {

void require(bool cond, const char* op, const std::string& what) {
  if (!cond) throw Error(std::string(op) + ": " + what);
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

const Tensor& dy(Graph& g, NodeId self) { return *g.grad(self); }

Shape matrix_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

}  // namespace

NodeId add(Graph& g, NodeId a, NodeId b) {
  const Tensor& x = g.value(a);
  const Tensor& y = g.value(b);
  require_same(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return g.record("add", std::move(out), {a, b}, [a, b](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    for (NodeId in : {a, b}) {
      if (!g.needs_grad(in)) continue;
      Tensor& gi = g.grad_buffer(in);
      for (std::size_t i = 0; i < d.size(); ++i) gi[i] += d[i];
    }
  });
}

NodeId sub(Graph& g, NodeId a, NodeId b) {
  const Tensor& x = g.value(a);
  const Tensor& y = g.value(b);
  require_same(x, y, "sub");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return g.record("sub", std::move(out), {a, b}, [a, b](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    if (g.needs_grad(a)) {
      Tensor& ga = g.grad_buffer(a);
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i];
    }
    if (g.needs_grad(b)) {
      Tensor& gb = g.grad_buffer(b);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] -= d[i];
    }
  });
}

NodeId mul(Graph& g, NodeId a, NodeId b) {
  const Tensor& x = g.value(a);
  const Tensor& y = g.value(b);
  require_same(x, y, "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return g.record("mul", std::move(out), {a, b}, [a, b](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(b);
    if (g.needs_grad(a)) {
      Tensor& ga = g.grad_buffer(a);
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * y[i];
    }
    if (g.needs_grad(b)) {
      Tensor& gb = g.grad_buffer(b);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i] * x[i];
    }
  });
}

NodeId scale(Graph& g, NodeId a, double s) {
  Tensor out = g.value(a);
  for (double& v : out.values()) v *= s;
  return g.record("scale", std::move(out), {a}, [a, s](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    Tensor& ga = g.grad_buffer(a);
    for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * s;
  });
}

NodeId add_bias(Graph& g, NodeId xn, NodeId bn) {
  const Tensor& x = g.value(xn);
  const Tensor& b = g.value(bn);
  const std::size_t n = x.rows(), m = x.cols();
  require(b.size() == m, "add_bias", "bias size " + std::to_string(b.size()) + " vs cols " + std::to_string(m));
  Tensor out = x;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b[j];
  }
  return g.record("add_bias", std::move(out), {xn, bn}, [xn, bn, n, m](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    if (g.needs_grad(xn)) {
      Tensor& gx = g.grad_buffer(xn);
      for (std::size_t i = 0; i < d.size(); ++i) gx[i] += d[i];
    }
    if (g.needs_grad(bn)) {
      Tensor& gb = g.grad_buffer(bn);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) gb[j] += d[i * m + j];
      }
    }
  });
}

NodeId matmul(Graph& g, NodeId an, NodeId bn) {
  const Tensor& a = g.value(an);
  const Tensor& b = g.value(bn);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  require(b.rows() == k, "matmul",
          "inner dimensions " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  Tensor out(matrix_shape(n, m));
  kernels::matmul(a.data(), b.data(), out.data(), n, k, m, false);
  return g.record("matmul", std::move(out), {an, bn}, [an, bn, n, k, m](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    if (g.needs_grad(an)) {
      // dA = dY * B^T
      kernels::matmul_bt(d.data(), g.value(bn).data(), g.grad_buffer(an).data(), n, m, k, true);
    }
    if (g.needs_grad(bn)) {
      // dB = A^T * dY
      kernels::matmul_at(g.value(an).data(), d.data(), g.grad_buffer(bn).data(), n, k, m, true);
    }
  });
}

NodeId matmul_bt(Graph& g, NodeId an, NodeId bn) {
  const Tensor& a = g.value(an);
  const Tensor& b = g.value(bn);
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  require(b.cols() == k, "matmul_bt",
          "inner dimensions " + shape_string(a.shape()) + " * " + shape_string(b.shape()) + "^T");
  Tensor out(matrix_shape(n, m));
  kernels::matmul_bt(a.data(), b.data(), out.data(), n, k, m, false);
  return g.record("matmul_bt", std::move(out), {an, bn}, [an, bn, n, k, m](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    if (g.needs_grad(an)) {
      // dA = dY * B
      kernels::matmul(d.data(), g.value(bn).data(), g.grad_buffer(an).data(), n, m, k, true);
    }
    if (g.needs_grad(bn)) {
      // dB = dY^T * A
      kernels::matmul_at(d.data(), g.value(an).data(), g.grad_buffer(bn).data(), n, m, k, true);
    }
  });
}

NodeId linear(Graph& g, NodeId x, NodeId w, NodeId b) {
  NodeId y = matmul(g, x, w);
  return b.valid() ? add_bias(g, y, b) : y;
}

NodeId relu(Graph& g, NodeId xn) {
  Tensor out = g.value(xn);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return g.record("relu", std::move(out), {xn}, [xn](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    const Tensor& x = g.value(xn);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (x[i] > 0.0) gx[i] += d[i];
    }
  });
}

NodeId tanh(Graph& g, NodeId xn) {
  Tensor out = g.value(xn);
  for (double& v : out.values()) v = std::tanh(v);
  return g.record("tanh", std::move(out), {xn}, [xn](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    const Tensor& y = g.value(self);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < d.size(); ++i) gx[i] += d[i] * (1.0 - y[i] * y[i]);
  });
}

NodeId sigmoid(Graph& g, NodeId xn) {
  Tensor out = g.value(xn);
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  return g.record("sigmoid", std::move(out), {xn}, [xn](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    const Tensor& y = g.value(self);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < d.size(); ++i) gx[i] += d[i] * y[i] * (1.0 - y[i]);
  });
}

NodeId sum(Graph& g, NodeId xn) {
  double s = 0.0;
  for (double v : g.value(xn).values()) s += v;
  return g.record("sum", Tensor::scalar(s), {xn}, [xn](Graph& g, NodeId self) {
    const double d = dy(g, self)[0];
    for (double& v : g.grad_buffer(xn).values()) v += d;
  });
}

NodeId mean(Graph& g, NodeId xn) {
  const std::size_t n = g.value(xn).size();
  require(n > 0, "mean", "empty tensor");
  return scale(g, sum(g, xn), 1.0 / static_cast<double>(n));
}

NodeId mean_rows(Graph& g, NodeId xn) {
  const Tensor& x = g.value(xn);
  const std::size_t n = x.rows(), m = x.cols();
  require(n > 0, "mean_rows", "no rows");
  Tensor out(matrix_shape(1, m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[j] += x[i * m + j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : out.values()) v *= inv;
  return g.record("mean_rows", std::move(out), {xn}, [xn, n, m, inv](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += d[j] * inv;
    }
  });
}

NodeId concat_rows(Graph& g, const std::vector<NodeId>& parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const std::size_t m = g.value(parts[0]).cols();
  std::size_t n = 0;
  for (NodeId p : parts) {
    require(g.value(p).cols() == m, "concat_rows", "column mismatch");
    n += g.value(p).rows();
  }
  Tensor out(matrix_shape(n, m));
  std::size_t off = 0;
  for (NodeId p : parts) {
    const Tensor& v = g.value(p);
    std::copy(v.data(), v.data() + v.size(), out.data() + off);
    off += v.size();
  }
  return g.record("concat_rows", std::move(out), parts, [parts](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    std::size_t off = 0;
    for (NodeId p : parts) {
      const std::size_t sz = g.value(p).size();
      if (g.needs_grad(p)) {
        Tensor& gp = g.grad_buffer(p);
        for (std::size_t i = 0; i < sz; ++i) gp[i] += d[off + i];
      }
      off += sz;
    }
  });
}

NodeId slice_rows(Graph& g, NodeId xn, std::size_t start, std::size_t count) {
  const Tensor& x = g.value(xn);
  const std::size_t m = x.cols();
  require(start + count <= x.rows(), "slice_rows", "range out of bounds");
  Tensor out(matrix_shape(count, m));
  std::copy(x.data() + start * m, x.data() + (start + count) * m, out.data());
  return g.record("slice_rows", std::move(out), {xn}, [xn, start, m](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < d.size(); ++i) gx[start * m + i] += d[i];
  });
}

NodeId pick(Graph& g, NodeId xn, std::size_t r, std::size_t c) {
  const Tensor& x = g.value(xn);
  require(r < x.rows() && c < x.cols(), "pick", "index out of range");
  const std::size_t idx = r * x.cols() + c;
  return g.record("pick", Tensor::scalar(x[idx]), {xn}, [xn, idx](Graph& g, NodeId self) {
    g.grad_buffer(xn)[idx] += dy(g, self)[0];
  });
}

NodeId layer_norm(Graph& g, NodeId xn, NodeId gn, NodeId bn, double eps) {
  const Tensor& x = g.value(xn);
  const Tensor& gain = g.value(gn);
  const Tensor& bias = g.value(bn);
  const std::size_t n = x.rows(), m = x.cols();
  require(gain.size() == m && bias.size() == m, "layer_norm", "gain/bias size mismatch");
  Tensor out(x.shape());
  std::vector<double> xhat(n * m), inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < m; ++j) mu += x[i * m + j];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double c = x[i * m + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(m);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < m; ++j) {
      const double h = (x[i * m + j] - mu) * is;
      xhat[i * m + j] = h;
      out[i * m + j] = h * gain[j] + bias[j];
    }
  }
  return g.record("layer_norm", std::move(out), {xn, gn, bn},
                  [xn, gn, bn, n, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    const Tensor& gain = g.value(gn);
    if (g.needs_grad(gn)) {
      Tensor& gg = g.grad_buffer(gn);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gg[j] += d[i * m + j] * xhat[i * m + j];
    }
    if (g.needs_grad(bn)) {
      Tensor& gb = g.grad_buffer(bn);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gb[j] += d[i * m + j];
    }
    if (g.needs_grad(xn)) {
      Tensor& gx = g.grad_buffer(xn);
      const double inv_m = 1.0 / static_cast<double>(m);
      for (std::size_t i = 0; i < n; ++i) {
        double mean_dh = 0.0, mean_dh_h = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          const double dh = d[i * m + j] * gain[j];
          mean_dh += dh;
          mean_dh_h += dh * xhat[i * m + j];
        }
        mean_dh *= inv_m;
        mean_dh_h *= inv_m;
        for (std::size_t j = 0; j < m; ++j) {
          const double dh = d[i * m + j] * gain[j];
          gx[i * m + j] += inv_std[i] * (dh - mean_dh - xhat[i * m + j] * mean_dh_h);
        }
      }
    }
  });
}

NodeId attention(Graph& g, NodeId qn, NodeId kn, NodeId vn, std::size_t heads, bool causal) {
  const Tensor& q = g.value(qn);
  const Tensor& k = g.value(kn);
  const Tensor& v = g.value(vn);
  const std::size_t n = q.rows(), m = k.rows(), d = q.cols();
  require(k.cols() == d && v.cols() == d && v.rows() == m, "attention", "q/k/v shape mismatch");
  require(heads > 0 && d % heads == 0, "attention", "model width not divisible by heads");
  require(!causal || n == m, "attention", "causal attention needs square scores");
  require(m > 0, "attention", "no keys");
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> probs(heads * n * m, 0.0);
  Tensor out(matrix_shape(n, d));
  std::vector<double> row(m);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t visible = causal ? i + 1 : m;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < visible; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += q[i * d + off + c] * k[j * d + off + c];
        row[j] = s * sc;
        mx = std::max(mx, row[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < visible; ++j) {
        row[j] = std::exp(row[j] - mx);
        z += row[j];
      }
      double* p = probs.data() + (h * n + i) * m;
      for (std::size_t j = 0; j < visible; ++j) p[j] = row[j] / z;
      for (std::size_t j = 0; j < visible; ++j) {
        const double pj = p[j];
        for (std::size_t c = 0; c < dh; ++c) out[i * d + off + c] += pj * v[j * d + off + c];
      }
    }
  }
  return g.record("attention", std::move(out), {qn, kn, vn},
                  [qn, kn, vn, n, m, d, dh, heads, sc, causal, probs = std::move(probs)](Graph& g, NodeId self) {
    const Tensor& dout = dy(g, self);
    const Tensor& q = g.value(qn);
    const Tensor& k = g.value(kn);
    const Tensor& v = g.value(vn);
    Tensor* gq = g.needs_grad(qn) ? &g.grad_buffer(qn) : nullptr;
    Tensor* gk = g.needs_grad(kn) ? &g.grad_buffer(kn) : nullptr;
    Tensor* gv = g.needs_grad(vn) ? &g.grad_buffer(vn) : nullptr;
    std::vector<double> dp(m), ds(m);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t visible = causal ? i + 1 : m;
        const double* p = probs.data() + (h * n + i) * m;
        double dot = 0.0;
        for (std::size_t j = 0; j < visible; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += dout[i * d + off + c] * v[j * d + off + c];
          dp[j] = s;
          dot += s * p[j];
        }
        for (std::size_t j = 0; j < visible; ++j) ds[j] = p[j] * (dp[j] - dot) * sc;
        for (std::size_t j = 0; j < visible; ++j) {
          for (std::size_t c = 0; c < dh; ++c) {
            if (gq) (*gq)[i * d + off + c] += ds[j] * k[j * d + off + c];
            if (gk) (*gk)[j * d + off + c] += ds[j] * q[i * d + off + c];
            if (gv) (*gv)[j * d + off + c] += p[j] * dout[i * d + off + c];
          }
        }
      }
    }
  });
}

NodeId depthwise_conv3(Graph& g, NodeId xn, NodeId wn, NodeId bn, bool causal) {
  const Tensor& x = g.value(xn);
  const Tensor& w = g.value(wn);
  const Tensor& b = g.value(bn);
  const std::size_t n = x.rows(), d = x.cols();
  require(w.rows() == 3 && w.cols() == d && b.size() == d, "depthwise_conv3", "weight shape mismatch");
  const long first = causal ? -2 : -1;
  Tensor out(matrix_shape(n, d));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < d; ++c) out[t * d + c] = b[c];
    for (std::size_t tap = 0; tap < 3; ++tap) {
      const long src = static_cast<long>(t) + first + static_cast<long>(tap);
      if (src < 0 || src >= static_cast<long>(n)) continue;
      for (std::size_t c = 0; c < d; ++c) out[t * d + c] += w[tap * d + c] * x[static_cast<std::size_t>(src) * d + c];
    }
  }
  return g.record("depthwise_conv3", std::move(out), {xn, wn, bn}, [xn, wn, bn, n, d, first](Graph& g, NodeId self) {
    const Tensor& dout = dy(g, self);
    const Tensor& x = g.value(xn);
    const Tensor& w = g.value(wn);
    Tensor* gx = g.needs_grad(xn) ? &g.grad_buffer(xn) : nullptr;
    Tensor* gw = g.needs_grad(wn) ? &g.grad_buffer(wn) : nullptr;
    Tensor* gb = g.needs_grad(bn) ? &g.grad_buffer(bn) : nullptr;
    for (std::size_t t = 0; t < n; ++t) {
      if (gb) {
        for (std::size_t c = 0; c < d; ++c) (*gb)[c] += dout[t * d + c];
      }
      for (std::size_t tap = 0; tap < 3; ++tap) {
        const long src = static_cast<long>(t) + first + static_cast<long>(tap);
        if (src < 0 || src >= static_cast<long>(n)) continue;
        const std::size_t s = static_cast<std::size_t>(src);
        for (std::size_t c = 0; c < d; ++c) {
          if (gx) (*gx)[s * d + c] += w[tap * d + c] * dout[t * d + c];
          if (gw) (*gw)[tap * d + c] += x[s * d + c] * dout[t * d + c];
        }
      }
    }
  });
}

NodeId gather_rows(Graph& g, NodeId tn, std::span<const int> ids) {
  const Tensor& table = g.value(tn);
  const std::size_t vocab = table.rows(), m = table.cols();
  Tensor out(matrix_shape(ids.size(), m));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    require(ids[r] >= 0 && static_cast<std::size_t>(ids[r]) < vocab, "gather_rows",
            "id " + std::to_string(ids[r]) + " outside table of " + std::to_string(vocab) + " rows");
    const double* src = table.data() + static_cast<std::size_t>(ids[r]) * m;
    std::copy(src, src + m, out.data() + r * m);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return g.record("gather_rows", std::move(out), {tn}, [tn, m, saved = std::move(saved)](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    Tensor& gt = g.grad_buffer(tn);
    for (std::size_t r = 0; r < saved.size(); ++r) {
      double* dst = gt.data() + static_cast<std::size_t>(saved[r]) * m;
      for (std::size_t c = 0; c < m; ++c) dst[c] += d[r * m + c];
    }
  });
}

NodeId soft_gather_rows(Graph& g, NodeId tn, std::span<const int> ids,
                        const std::vector<std::optional<std::vector<double>>>& soft) {
  const Tensor& table = g.value(tn);
  const std::size_t vocab = table.rows(), m = table.cols();
  require(soft.size() == ids.size(), "soft_gather_rows", "one soft slot per id required");
  Tensor out(matrix_shape(ids.size(), m));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    double* dst = out.data() + r * m;
    if (soft[r]) {
      const auto& p = *soft[r];
      require(p.size() == vocab, "soft_gather_rows",
              "distribution of size " + std::to_string(p.size()) + " vs " + std::to_string(vocab) + " rows");
      for (std::size_t j = 0; j < vocab; ++j) {
        if (p[j] == 0.0) continue;
        const double* src = table.data() + j * m;
        for (std::size_t c = 0; c < m; ++c) dst[c] += p[j] * src[c];
      }
    } else {
      require(ids[r] >= 0 && static_cast<std::size_t>(ids[r]) < vocab, "soft_gather_rows", "id out of range");
      const double* src = table.data() + static_cast<std::size_t>(ids[r]) * m;
      std::copy(src, src + m, dst);
    }
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return g.record("soft_gather_rows", std::move(out), {tn},
                  [tn, m, vocab, saved = std::move(saved), soft](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    Tensor& gt = g.grad_buffer(tn);
    for (std::size_t r = 0; r < saved.size(); ++r) {
      if (soft[r]) {
        const auto& p = *soft[r];
        for (std::size_t j = 0; j < vocab; ++j) {
          if (p[j] == 0.0) continue;
          double* dst = gt.data() + j * m;
          for (std::size_t c = 0; c < m; ++c) dst[c] += p[j] * d[r * m + c];
        }
      } else {
        double* dst = gt.data() + static_cast<std::size_t>(saved[r]) * m;
        for (std::size_t c = 0; c < m; ++c) dst[c] += d[r * m + c];
      }
    }
  });
}

NodeId dropout(Graph& g, NodeId xn, double p, Rng& rng) {
  if (p <= 0.0) return xn;
  require(p < 1.0, "dropout", "rate must be < 1");
  const Tensor& x = g.value(xn);
  const double keep = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = rng.uniform() < p ? 0.0 : keep;
    out[i] *= mask[i];
  }
  return g.record("dropout", std::move(out), {xn}, [xn, mask = std::move(mask)](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < d.size(); ++i) gx[i] += d[i] * mask[i];
  });
}

std::vector<double> log_softmax(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

NodeId log_softmax_rows(Graph& g, NodeId xn) {
  const Tensor& x = g.value(xn);
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    auto ls = log_softmax(x.row(i));
    std::copy(ls.begin(), ls.end(), out.data() + i * m);
  }
  return g.record("log_softmax_rows", std::move(out), {xn}, [xn, n, m](Graph& g, NodeId self) {
    const Tensor& d = dy(g, self);
    const Tensor& y = g.value(self);
    Tensor& gx = g.grad_buffer(xn);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += d[i * m + j];
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += d[i * m + j] - std::exp(y[i * m + j]) * s;
    }
  });
}

namespace {

NodeId cross_entropy_impl(Graph& g, NodeId ln, std::span<const int> targets, bool average, const char* name) {
  const Tensor& x = g.value(ln);
  const std::size_t n = x.rows(), m = x.cols();
  require(targets.size() == n, name,
          std::to_string(targets.size()) + " targets for " + std::to_string(n) + " rows");
  std::vector<double> probs(n * m);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(targets[i] >= 0 && static_cast<std::size_t>(targets[i]) < m, name,
            "target index " + std::to_string(targets[i]) + " outside vocabulary of " + std::to_string(m));
    auto ls = log_softmax(x.row(i));
    loss -= ls[static_cast<std::size_t>(targets[i])];
    for (std::size_t j = 0; j < m; ++j) probs[i * m + j] = std::exp(ls[j]);
  }
  const double factor = average && n > 0 ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<int> saved(targets.begin(), targets.end());
  return g.record(name, Tensor::scalar(loss * factor), {ln},
                  [ln, n, m, factor, probs = std::move(probs), saved = std::move(saved)](Graph& g, NodeId self) {
    const double d = dy(g, self)[0] * factor;
    Tensor& gx = g.grad_buffer(ln);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += d * probs[i * m + j];
      gx[i * m + static_cast<std::size_t>(saved[i])] -= d;
    }
  });
}

}  // namespace

NodeId softmax_cross_entropy(Graph& g, NodeId logits, std::span<const int> targets) {
  return cross_entropy_impl(g, logits, targets, true, "softmax_cross_entropy");
}

NodeId nll_sum(Graph& g, NodeId logits, std::span<const int> targets) {
  return cross_entropy_impl(g, logits, targets, false, "nll_sum");
}

NodeId squared_error(Graph& g, NodeId xn, double target) {
  const Tensor& x = g.value(xn);
  require(x.size() == 1, "squared_error", "expects a single element");
  const double diff = x[0] - target;
  return g.record("squared_error", Tensor::scalar(diff * diff), {xn}, [xn, diff](Graph& g, NodeId self) {
    g.grad_buffer(xn)[0] += 2.0 * diff * dy(g, self)[0];
  });
}

}  // namespace nmt::num
