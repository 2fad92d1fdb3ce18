// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/blob.hpp"

#include <cstring>

#include "mvln/error.hpp"
#include "mvln/pointcloud_io.hpp"

namespace mvln {
namespace {

constexpr char kMagic[4] = {'M', 'V', 'L', 'N'};

template <typename T>
void append(std::vector<std::byte>& out, T value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T read() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void read_into(void* dst, std::size_t n) {
    need(n);
    if (n > 0) std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kMalformedFile, "blob truncated");
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t NamedArray::numel() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void ParamStore::put(const std::string& name, NamedArray array) {
  if (array.values.size() != array.numel()) {
    throw Error(ErrorCode::kShapeMismatch, "array '" + name + "' payload does not match its dims");
  }
  entries_[name] = std::move(array);
}

void ParamStore::put(const std::string& name, const Tensor& t) {
  const auto& s = t.shape();
  put(name, NamedArray{{static_cast<std::uint32_t>(s.depth), static_cast<std::uint32_t>(s.height),
                        static_cast<std::uint32_t>(s.width)},
                       t.storage()});
}

const NamedArray* ParamStore::find(const std::string& name) const {
  const auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

const NamedArray& ParamStore::at(const std::string& name) const {
  const auto* a = find(name);
  if (a == nullptr) throw Error(ErrorCode::kShapeMismatch, "missing array '" + name + "'");
  return *a;
}

Tensor ParamStore::tensor(const std::string& name) const {
  const auto& a = at(name);
  if (a.dims.size() != 3) throw Error(ErrorCode::kShapeMismatch, "array '" + name + "' is not rank 3");
  return Tensor(Shape{static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]), static_cast<int>(a.dims[2])},
                a.values);
}

std::vector<std::byte> serialize_blob(const ParamStore& store) {
  std::vector<std::byte> out;
  const auto* magic = reinterpret_cast<const std::byte*>(kMagic);
  out.insert(out.end(), magic, magic + 4);
  append<std::uint32_t>(out, ParamStore::kVersion);
  append<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, array] : store.entries()) {
    if (name.size() > 0xFFFF) throw Error(ErrorCode::kMalformedFile, "entry name too long");
    if (array.dims.size() > 0xFF) throw Error(ErrorCode::kMalformedFile, "entry rank too large");
    append<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    const auto* n = reinterpret_cast<const std::byte*>(name.data());
    out.insert(out.end(), n, n + name.size());
    append<std::uint8_t>(out, static_cast<std::uint8_t>(array.dims.size()));
    for (auto d : array.dims) append<std::uint32_t>(out, d);
    const auto* v = reinterpret_cast<const std::byte*>(array.values.data());
    out.insert(out.end(), v, v + array.values.size() * sizeof(float));
  }
  return out;
}

ParamStore parse_blob(std::span<const std::byte> bytes) {
  Reader r(bytes);
  char magic[4];
  r.read_into(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::kMalformedFile, "bad blob magic");
  const auto version = r.read<std::uint32_t>();
  if (version != ParamStore::kVersion) {
    throw Error(ErrorCode::kMalformedFile, "unsupported blob version " + std::to_string(version));
  }
  const auto count = r.read<std::uint32_t>();
  ParamStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = r.read<std::uint16_t>();
    std::string name(name_len, '\0');
    r.read_into(name.data(), name_len);
    NamedArray array;
    array.dims.resize(r.read<std::uint8_t>());
    for (auto& d : array.dims) d = r.read<std::uint32_t>();
    const std::size_t n = array.numel();
    if (n > bytes.size()) throw Error(ErrorCode::kMalformedFile, "blob truncated");
    array.values.resize(n);
    r.read_into(array.values.data(), n * sizeof(float));
    if (store.contains(name)) throw Error(ErrorCode::kDuplicateName, "duplicate entry '" + name + "'");
    store.put(name, std::move(array));
  }
  if (!r.done()) throw Error(ErrorCode::kMalformedFile, "trailing bytes after last entry");
  return store;
}

ParamStore load_weight_blob(const std::filesystem::path& path) { return parse_blob(read_file_bytes(path)); }

void save_weight_blob(const ParamStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_blob(store));
}

}  // namespace mvln
