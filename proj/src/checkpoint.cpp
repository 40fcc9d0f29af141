// Copyright 2026 The mtop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtop/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mtop/error.hpp"

namespace mtop {
namespace {

constexpr char kMagic[8] = {'M', 'T', 'O', 'P', 'C', 'K', 'P', 'T'};

enum RecordKind : std::uint8_t { kMlp = 1, kReals = 2, kText = 3, kU64s = 4 };

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s(in_.begin() + pos_, in_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw IoError("checkpoint: truncated payload");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

void write_mlp(Writer& w, const MlpParams& p) {
  w.u32(static_cast<std::uint32_t>(p.num_layers()));
  for (const Layer& layer : p.layers()) {
    w.u32(static_cast<std::uint32_t>(layer.weight.rows()));
    w.u32(static_cast<std::uint32_t>(layer.weight.cols()));
    w.u8(static_cast<std::uint8_t>(layer.activation));
    for (double x : layer.weight.data()) w.f64(x);
    for (double x : layer.bias) w.f64(x);
  }
}

MlpParams read_mlp(Reader& r) {
  const std::uint32_t n = r.u32();
  std::vector<Layer> layers;
  for (std::uint32_t l = 0; l < n; ++l) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::kTanh)) {
      throw IoError("checkpoint: unknown activation tag " + std::to_string(act));
    }
    Layer layer;
    layer.activation = static_cast<Activation>(act);
    layer.weight = Matrix(rows, cols);
    for (double& x : layer.weight.data()) x = r.f64();
    layer.bias.resize(rows);
    for (double& x : layer.bias) x = r.f64();
    layers.push_back(std::move(layer));
  }
  return MlpParams(std::move(layers));
}

}  // namespace

template <class T>
const T& Checkpoint::get(const std::string& name, const char* kind) const {
  auto it = records_.find(name);
  if (it == records_.end()) throw ContractError("checkpoint: missing record '" + name + "'");
  if (!std::holds_alternative<T>(it->second)) {
    throw ContractError("checkpoint: record '" + name + "' is not " + kind);
  }
  return std::get<T>(it->second);
}

const MlpParams& Checkpoint::mlp(const std::string& name) const {
  return get<MlpParams>(name, "an mlp");
}
const Vec& Checkpoint::reals(const std::string& name) const {
  return get<Vec>(name, "a real array");
}
const std::string& Checkpoint::text(const std::string& name) const {
  return get<std::string>(name, "text");
}
const std::vector<std::uint64_t>& Checkpoint::u64s(const std::string& name) const {
  return get<std::vector<std::uint64_t>>(name, "a u64 array");
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(records_.size()));
  for (const auto& [name, value] : records_) {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, MlpParams>) {
            w.u8(kMlp);
          } else if constexpr (std::is_same_v<T, Vec>) {
            w.u8(kReals);
          } else if constexpr (std::is_same_v<T, std::string>) {
            w.u8(kText);
          } else {
            w.u8(kU64s);
          }
          w.u32(static_cast<std::uint32_t>(name.size()));
          w.bytes(name);
          if constexpr (std::is_same_v<T, MlpParams>) {
            write_mlp(w, v);
          } else if constexpr (std::is_same_v<T, Vec>) {
            w.u64(v.size());
            for (double x : v) w.f64(x);
          } else if constexpr (std::is_same_v<T, std::string>) {
            w.u64(v.size());
            w.bytes(v);
          } else {
            w.u64(v.size());
            for (std::uint64_t x : v) w.u64(x);
          }
        },
        value);
  }
  return w.take();
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  for (char c : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(c)) throw IoError("checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t kind = r.u8();
    const std::string name = r.bytes(r.u32());
    switch (kind) {
      case kMlp:
        ck.records_[name] = read_mlp(r);
        break;
      case kReals: {
        Vec v(r.u64());
        for (double& x : v) x = r.f64();
        ck.records_[name] = std::move(v);
        break;
      }
      case kText: {
        const std::uint64_t n = r.u64();
        ck.records_[name] = r.bytes(n);
        break;
      }
      case kU64s: {
        std::vector<std::uint64_t> v(r.u64());
        for (auto& x : v) x = r.u64();
        ck.records_[name] = std::move(v);
        break;
      }
      default:
        throw IoError("checkpoint: unknown record kind " + std::to_string(kind));
    }
  }
  if (!r.done()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

void Checkpoint::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace mtop
