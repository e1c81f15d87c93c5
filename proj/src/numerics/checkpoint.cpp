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

#include "nmt/numerics/checkpoint.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "nmt/error.h"

namespace nmt::num {

namespace {

constexpr char kMagic[8] = {'D', 'N', 'M', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string str() {
    const auto n = static_cast<std::size_t>(uint(4));
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(sizeof kMagic);
    if (std::memcmp(bytes_.data() + pos_, kMagic, sizeof kMagic) != 0) throw Error("checkpoint: bad magic");
    pos_ += sizeof kMagic;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error("checkpoint: truncated data");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw Error("checkpoint: missing metadata key '" + key + "'");
  return it->second;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double x : t.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      put_u64(out, bits);
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  in.expect_magic();
  const auto version = in.uint(4);
  if (version != Checkpoint::kVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = in.uint(4);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = in.str();
    ckpt.metadata[k] = in.str();
  }
  const auto n_tensor = in.uint(4);
  for (std::uint64_t i = 0; i < n_tensor; ++i) {
    std::string name = in.str();
    const auto rank = in.uint(4);
    Shape shape;
    for (std::uint64_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(in.uint(8)));
    std::vector<double> data(shape_size(shape));
    for (double& x : data) {
      const std::uint64_t bits = in.uint(8);
      std::memcpy(&x, &bits, sizeof x);
    }
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (!in.done()) throw Error("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write on checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

Checkpoint params_to_checkpoint(const ParamStore& params) {
  Checkpoint ckpt;
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.emplace_back(params[i].name, params[i].value);
  return ckpt;
}

void load_params(ParamStore& params, const Checkpoint& ckpt) {
  if (ckpt.tensors.size() != params.size()) {
    throw Error("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                std::to_string(params.size()));
  }
  for (const auto& [name, t] : ckpt.tensors) {
    Parameter* p = params.find(name);
    if (!p) throw Error("checkpoint tensor '" + name + "' has no matching parameter");
    if (!p->value.same_shape(t)) {
      throw Error("checkpoint tensor '" + name + "' has shape " + shape_string(t.shape()) + ", expected " +
                  shape_string(p->value.shape()));
    }
    p->value = t;
  }
}

}  // namespace nmt::num
