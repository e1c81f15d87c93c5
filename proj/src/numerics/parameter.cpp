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

#include "nmt/numerics/parameter.h"

#include <cstring>

#include "nmt/error.h"
#include "nmt/numerics/rng.h"

namespace nmt::num {

ParamStore::ParamStore(const ParamStore& other) : index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParamStore::add(std::string name, Tensor value, bool requires_grad) {
  if (index_.count(name)) throw Error("duplicate parameter name '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back(std::make_unique<Parameter>(Parameter{std::move(name), std::move(value), requires_grad}));
  return *params_.back();
}

Parameter* ParamStore::find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParamStore::at(std::string_view name) {
  Parameter* p = find(name);
  if (!p) throw Error("unknown parameter '" + std::string(name) + "'");
  return *p;
}

const Parameter& ParamStore::at(std::string_view name) const {
  const Parameter* p = find(name);
  if (!p) throw Error("unknown parameter '" + std::string(name) + "'");
  return *p;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::uint64_t ParamStore::fingerprint() const {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  auto feed = [&h](std::uint64_t v) { h = mix64(h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2))); };
  for (const auto& p : params_) {
    for (char c : p->name) feed(static_cast<unsigned char>(c));
    for (std::size_t d : p->value.shape()) feed(d);
    for (double x : p->value.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      feed(bits);
    }
  }
  return h;
}

bool ParamStore::contains(const Parameter* p) const {
  for (const auto& q : params_) {
    if (q.get() == p) return true;
  }
  return false;
}

void ParamStore::assign_values(const ParamStore& other) {
  for (auto& p : params_) {
    const Parameter* src = other.find(p->name);
    if (!src) continue;
    if (!src->value.same_shape(p->value)) {
      throw Error("shape mismatch assigning parameter '" + p->name + "'");
    }
    p->value = src->value;
  }
}

}  // namespace nmt::num
