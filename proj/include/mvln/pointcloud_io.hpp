// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvln {

struct Point {
  float x = 0.0F;
  float y = 0.0F;
  float z = 0.0F;
  float intensity = 0.0F;  // [0, 1]
};

/// LiDAR sweep in the ego frame, meters.
struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

enum class Taxonomy : std::uint8_t { kRawSemanticKitti, kSeg7, kDet3 };

/// Perspective-stage segmentation classes.
enum class Seg7 : std::uint16_t {
  kCar = 0,
  kTruck = 1,
  kPedestrian = 2,
  kCyclist = 3,
  kRoad = 4,
  kSidewalk = 5,
  kUnknown = 6,
};
inline constexpr int kNumSeg7 = 7;

/// Top-down detection classes.
enum class Det3 : std::uint16_t { kVehicle = 0, kPedestrian = 1, kUnknown = 2 };
inline constexpr int kNumDet3 = 3;

std::string_view seg7_name(Seg7 c);
std::optional<Seg7> seg7_from_name(std::string_view name);
std::string_view det3_name(Det3 c);
std::optional<Det3> det3_from_name(std::string_view name);

/// Number of valid ids in a taxonomy (raw SemanticKITTI ids span 16 bits).
std::uint32_t taxonomy_size(Taxonomy t);

struct PointLabels {
  std::vector<std::uint16_t> labels;
  Taxonomy taxonomy = Taxonomy::kSeg7;

  std::size_t size() const noexcept { return labels.size(); }
};

struct LoadReport {
  std::size_t clamped_intensity = 0;
};

/// Reads a KITTI Velodyne scan: packed little-endian float quadruples.
/// Intensities outside [0,1] are clamped and counted in `report`.
PointCloud load_kitti_bin(const std::filesystem::path& path, LoadReport* report = nullptr);
PointCloud parse_kitti_bin(std::span<const std::byte> bytes, LoadReport* report = nullptr);
std::vector<std::byte> serialize_kitti_bin(const PointCloud& cloud);
void save_kitti_bin(const PointCloud& cloud, const std::filesystem::path& path);

/// Reads a SemanticKITTI `.label` file; instance ids (high 16 bits) are dropped.
PointLabels load_semantickitti_labels(const std::filesystem::path& path, std::size_t expected_count);
PointLabels parse_semantickitti_labels(std::span<const std::byte> bytes, std::size_t expected_count);
std::vector<std::byte> serialize_labels(const PointLabels& labels);
void save_labels(const PointLabels& labels, const std::filesystem::path& path);

/// Raw SemanticKITTI id -> seg7 mapping. Unlisted ids map to unknown.
class LabelTable {
 public:
  LabelTable() = default;

  static LabelTable semantickitti_default();
  static LabelTable identity_seg7();
  /// Parses `raw_id = seg7_name` lines; `#` starts a comment.
  static LabelTable parse(std::string_view text);
  static LabelTable load(const std::filesystem::path& path);

  void set(std::uint32_t raw_id, Seg7 cls) { table_[raw_id] = cls; }
  Seg7 lookup(std::uint32_t raw_id) const;
  const std::map<std::uint32_t, Seg7>& entries() const noexcept { return table_; }

 private:
  std::map<std::uint32_t, Seg7> table_;
};

PointLabels remap_labels(const PointLabels& raw, const LabelTable& table);

/// Throws kLengthMismatch / kMalformedFile when labels do not fit the cloud or taxonomy.
void validate_labels(const PointLabels& labels, std::size_t point_count);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace mvln
