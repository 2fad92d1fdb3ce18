// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvln/postprocess.hpp"
#include "mvln/projection.hpp"

namespace mvln {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kBackground{0, 0, 0};
inline constexpr Rgb kPointColor{0, 200, 200};
inline constexpr Rgb kDrivableColor{0, 170, 0};

class Image {
 public:
  Image(int width, int height, Rgb fill = kBackground)
      : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  Rgb get(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, Rgb c) {
    if (contains(x, y)) pixels_[static_cast<std::size_t>(y) * width_ + x] = c;
  }
  void draw_line(int x0, int y0, int x1, int y1, Rgb c);

  /// Binary P6 portable pixmap.
  std::vector<std::byte> to_ppm() const;
  void write_ppm(const std::filesystem::path& path) const;

 private:
  int width_;
  int height_;
  std::vector<Rgb> pixels_;
};

/// Pixel of an ego-frame point in a BEV rendering at input-grid resolution:
/// +x points up, +y points left.
std::array<int, 2> world_to_pixel(double x, double y, const BevConfig& cfg);

/// Distinct, deterministic colour per detection instance.
Rgb instance_color(std::size_t instance);

/// Outline corners as drawn: the box itself for vehicles, an axis-aligned square of
/// side max(width, length) for pedestrians.
std::array<Vec2, 4> drawn_outline(const OrientedBox& box);

/// Top-down view: occupied cells, drivable cells and detection outlines.
Image render_bev(const BevConfig& cfg, std::span<const std::uint8_t> occupancy,
                 std::span<const std::uint8_t> drivable, std::span<const OrientedBox> boxes);

/// Drivable-space mask as an image (drivable cells green, others black).
Image render_mask(const BevConfig& cfg, std::span<const std::uint8_t> drivable);

std::string render_svg(const BevConfig& cfg, std::span<const OrientedBox> boxes);

}  // namespace mvln
