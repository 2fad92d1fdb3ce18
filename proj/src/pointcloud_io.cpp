// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/pointcloud_io.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mvln/error.hpp"

namespace mvln {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats are read with native little-endian layout");

constexpr std::array<std::string_view, kNumSeg7> kSeg7Names = {
    "car", "truck", "pedestrian", "cyclist", "road", "sidewalk", "unknown"};
constexpr std::array<std::string_view, kNumDet3> kDet3Names = {"vehicle", "pedestrian", "unknown"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view seg7_name(Seg7 c) { return kSeg7Names.at(static_cast<std::size_t>(c)); }

std::optional<Seg7> seg7_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSeg7Names.size(); ++i) {
    if (kSeg7Names[i] == name) return static_cast<Seg7>(i);
  }
  return std::nullopt;
}

std::string_view det3_name(Det3 c) { return kDet3Names.at(static_cast<std::size_t>(c)); }

std::optional<Det3> det3_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kDet3Names.size(); ++i) {
    if (kDet3Names[i] == name) return static_cast<Det3>(i);
  }
  return std::nullopt;
}

std::uint32_t taxonomy_size(Taxonomy t) {
  switch (t) {
    case Taxonomy::kRawSemanticKitti: return 1U << 16;
    case Taxonomy::kSeg7: return kNumSeg7;
    case Taxonomy::kDet3: return kNumDet3;
  }
  return 0;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> bytes(size);
  in.seekg(0);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorCode::kIo, "short read on " + path.string());
  }
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed on " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename onto " + path.string());
  }
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

PointCloud parse_kitti_bin(std::span<const std::byte> bytes, LoadReport* report) {
  constexpr std::size_t kRecord = 4 * sizeof(float);
  if (bytes.size() % kRecord != 0) {
    throw Error(ErrorCode::kMalformedFile,
                "scan size " + std::to_string(bytes.size()) + " is not a multiple of 16 bytes");
  }
  PointCloud cloud;
  cloud.points.resize(bytes.size() / kRecord);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    std::array<float, 4> v{};
    std::memcpy(v.data(), bytes.data() + i * kRecord, kRecord);
    for (float f : v) {
      if (!std::isfinite(f)) {
        throw Error(ErrorCode::kNonFiniteValue, "non-finite value in point " + std::to_string(i));
      }
    }
    float intensity = v[3];
    if (intensity < 0.0F || intensity > 1.0F) {
      intensity = std::clamp(intensity, 0.0F, 1.0F);
      ++clamped;
    }
    cloud.points[i] = Point{v[0], v[1], v[2], intensity};
  }
  if (report != nullptr) report->clamped_intensity = clamped;
  return cloud;
}

PointCloud load_kitti_bin(const std::filesystem::path& path, LoadReport* report) {
  const auto bytes = read_file_bytes(path);
  return parse_kitti_bin(bytes, report);
}

std::vector<std::byte> serialize_kitti_bin(const PointCloud& cloud) {
  std::vector<std::byte> bytes(cloud.size() * 4 * sizeof(float));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const std::array<float, 4> v = {p.x, p.y, p.z, p.intensity};
    std::memcpy(bytes.data() + i * 16, v.data(), 16);
  }
  return bytes;
}

void save_kitti_bin(const PointCloud& cloud, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_kitti_bin(cloud));
}

PointLabels parse_semantickitti_labels(std::span<const std::byte> bytes, std::size_t expected_count) {
  if (bytes.size() != expected_count * sizeof(std::uint32_t)) {
    throw Error(ErrorCode::kMalformedFile, "label file holds " + std::to_string(bytes.size()) +
                                               " bytes, expected " +
                                               std::to_string(expected_count * 4));
  }
  PointLabels out;
  out.taxonomy = Taxonomy::kRawSemanticKitti;
  out.labels.resize(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    std::uint32_t word = 0;
    std::memcpy(&word, bytes.data() + i * 4, 4);
    out.labels[i] = static_cast<std::uint16_t>(word & 0xFFFFU);
  }
  return out;
}

PointLabels load_semantickitti_labels(const std::filesystem::path& path, std::size_t expected_count) {
  return parse_semantickitti_labels(read_file_bytes(path), expected_count);
}

std::vector<std::byte> serialize_labels(const PointLabels& labels) {
  std::vector<std::byte> bytes(labels.size() * sizeof(std::uint32_t));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t word = labels.labels[i];
    std::memcpy(bytes.data() + i * 4, &word, 4);
  }
  return bytes;
}

void save_labels(const PointLabels& labels, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_labels(labels));
}

LabelTable LabelTable::semantickitti_default() {
  LabelTable t;
  t.set(10, Seg7::kCar);
  t.set(18, Seg7::kTruck);
  t.set(13, Seg7::kTruck);
  t.set(30, Seg7::kPedestrian);
  for (std::uint32_t id : {31U, 32U, 11U, 15U}) t.set(id, Seg7::kCyclist);
  t.set(40, Seg7::kRoad);
  t.set(44, Seg7::kRoad);
  t.set(48, Seg7::kSidewalk);
  return t;
}

LabelTable LabelTable::identity_seg7() {
  LabelTable t;
  for (std::uint32_t i = 0; i < kNumSeg7; ++i) t.set(i, static_cast<Seg7>(i));
  return t;
}

LabelTable LabelTable::parse(std::string_view text) {
  LabelTable t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig, "class map line " + std::to_string(line_no) + ": missing '='");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    std::uint32_t raw = 0;
    const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), raw);
    if (ec != std::errc{} || ptr != key.data() + key.size() || raw > 0xFFFFU) {
      throw Error(ErrorCode::kInvalidConfig, "class map line " + std::to_string(line_no) + ": bad raw id");
    }
    const auto cls = seg7_from_name(value);
    if (!cls) {
      throw Error(ErrorCode::kInvalidConfig,
                  "class map line " + std::to_string(line_no) + ": unknown class '" + std::string(value) + "'");
    }
    t.set(raw, *cls);
  }
  return t;
}

LabelTable LabelTable::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Seg7 LabelTable::lookup(std::uint32_t raw_id) const {
  const auto it = table_.find(raw_id);
  return it == table_.end() ? Seg7::kUnknown : it->second;
}

PointLabels remap_labels(const PointLabels& raw, const LabelTable& table) {
  PointLabels out;
  out.taxonomy = Taxonomy::kSeg7;
  out.labels.resize(raw.size());
  std::transform(raw.labels.begin(), raw.labels.end(), out.labels.begin(),
                 [&](std::uint16_t id) { return static_cast<std::uint16_t>(table.lookup(id)); });
  return out;
}

void validate_labels(const PointLabels& labels, std::size_t point_count) {
  if (labels.size() != point_count) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(labels.size()) + " labels for " +
                                                std::to_string(point_count) + " points");
  }
  const auto limit = taxonomy_size(labels.taxonomy);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.labels[i] >= limit) {
      throw Error(ErrorCode::kMalformedFile, "label " + std::to_string(labels.labels[i]) +
                                                 " at point " + std::to_string(i) +
                                                 " is invalid for its taxonomy");
    }
  }
}

}  // namespace mvln
