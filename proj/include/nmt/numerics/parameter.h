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

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nmt/numerics/tensor.h"

namespace nmt::num {

// A named trainable tensor. Addresses are stable for the lifetime of the
// owning ParamStore, so a Parameter* doubles as the parameter id.
struct Parameter {
  std::string name;
  Tensor value;
  bool requires_grad = true;
};

using GradientMap = std::map<const Parameter*, Tensor>;

class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter& add(std::string name, Tensor value, bool requires_grad = true);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  // Total number of scalar weights.
  std::size_t scalar_count() const;
  // Stable 64-bit digest of every name and value bit; used to prove that a
  // frozen model was not touched.
  std::uint64_t fingerprint() const;
  bool contains(const Parameter* p) const;
  // Copies values of identically named parameters from `other`.
  void assign_values(const ParamStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace nmt::num
