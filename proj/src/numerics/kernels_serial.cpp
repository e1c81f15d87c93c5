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

#include "nmt/numerics/kernels.h"

namespace nmt::num::kernels::serial {

void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    if (!accumulate) {
      for (std::size_t j = 0; j < m; ++j) ci[j] = 0.0;
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
}

void matmul_bt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * m + j] = accumulate ? c[i * m + j] + s : s;
    }
  }
}

void matmul_at(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate) {
  for (std::size_t p = 0; p < k; ++p) {
    double* cp = c + p * m;
    if (!accumulate) {
      for (std::size_t j = 0; j < m; ++j) cp[j] = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double aip = a[i * k + p];
      const double* bi = b + i * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += aip * bi[j];
    }
  }
}

}  // namespace nmt::num::kernels::serial
