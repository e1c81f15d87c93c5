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

// Dense GEMM kernels. The default entry points are OpenMP-parallel over output
// rows; `serial` holds the reference implementations they are tested against.
// Both accumulate every output element in the same order, so results are
// bit-identical regardless of thread count.
namespace nmt::num::kernels {

// c[n x m] (+)= a[n x k] * b[k x m]
void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate);
// c[n x m] (+)= a[n x k] * b[m x k]^T
void matmul_bt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);
// c[k x m] (+)= a[n x k]^T * b[n x m]
void matmul_at(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

namespace serial {
void matmul(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
            std::size_t m, bool accumulate);
void matmul_bt(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);
void matmul_at(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
               std::size_t m, bool accumulate);
}  // namespace serial

}  // namespace nmt::num::kernels
