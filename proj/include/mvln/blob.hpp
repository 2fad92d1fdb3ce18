// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvln/tensor.hpp"

namespace mvln {

/// Named n-dimensional float array.
struct NamedArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t numel() const;
  bool operator==(const NamedArray&) const = default;
};

/// Ordered name -> array map backing network weights and tensor dumps.
///
/// Binary layout (little-endian):
///   "MVLN" | version u32 | entry count u32 |
///   per entry: name length u16, UTF-8 name, rank u8, dims u32 x rank, f32 payload
class ParamStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string& name, NamedArray array);
  void put(const std::string& name, const Tensor& t);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const NamedArray* find(const std::string& name) const;
  const NamedArray& at(const std::string& name) const;
  Tensor tensor(const std::string& name) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, NamedArray>& entries() const noexcept { return entries_; }

  bool operator==(const ParamStore&) const = default;

 private:
  std::map<std::string, NamedArray> entries_;
};

std::vector<std::byte> serialize_blob(const ParamStore& store);
ParamStore parse_blob(std::span<const std::byte> bytes);
ParamStore load_weight_blob(const std::filesystem::path& path);
void save_weight_blob(const ParamStore& store, const std::filesystem::path& path);

}  // namespace mvln
