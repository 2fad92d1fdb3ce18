// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mvln/tensor.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mvln-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline mvln::Tensor random_tensor(mvln::Shape shape, std::mt19937_64& rng, float lo = -1.0F, float hi = 1.0F) {
  std::uniform_real_distribution<float> dist(lo, hi);
  mvln::Tensor t(shape);
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

inline std::vector<float> random_values(std::size_t n, std::mt19937_64& rng, float lo = -1.0F, float hi = 1.0F) {
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline std::vector<std::byte> le_floats(std::initializer_list<float> values) {
  std::vector<std::byte> out(values.size() * 4);
  std::size_t k = 0;
  for (float f : values) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, 4);
    for (int b = 0; b < 4; ++b) out[k++] = static_cast<std::byte>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

}  // namespace testing
