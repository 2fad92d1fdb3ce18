// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "mvln/error.hpp"
#include "mvln/eval.hpp"
#include "mvln/pointcloud_io.hpp"

namespace mvln {

void Image::draw_line(int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

std::vector<std::byte> Image::to_ppm() const {
  const std::string header = "P6\n" + std::to_string(width_) + " " + std::to_string(height_) + "\n255\n";
  std::vector<std::byte> out(header.size() + pixels_.size() * 3);
  std::transform(header.begin(), header.end(), out.begin(), [](char ch) { return static_cast<std::byte>(ch); });
  std::size_t k = header.size();
  for (const auto& p : pixels_) {
    out[k++] = static_cast<std::byte>(p.r);
    out[k++] = static_cast<std::byte>(p.g);
    out[k++] = static_cast<std::byte>(p.b);
  }
  return out;
}

void Image::write_ppm(const std::filesystem::path& path) const { write_file_atomic(path, to_ppm()); }

std::array<int, 2> world_to_pixel(double x, double y, const BevConfig& cfg) {
  const double half = cfg.extent / 2.0;
  const double s = cfg.cell_size();
  const int ix = static_cast<int>(std::floor((x + half) / s));
  const int iy = static_cast<int>(std::floor((y + half) / s));
  return {cfg.cells - 1 - iy, cfg.cells - 1 - ix};
}

Rgb instance_color(std::size_t instance) {
  // Golden-ratio hue walk, kept away from the green used for drivable space.
  const double hue = std::fmod(0.05 + static_cast<double>(instance) * 0.618033988749895, 1.0);
  const double h = (hue < 0.25 ? hue : hue + 0.2) * 6.0 / 1.2;
  const int sector = static_cast<int>(h) % 6;
  const double f = h - std::floor(h);
  const auto v = std::uint8_t{255};
  const auto q = static_cast<std::uint8_t>(255 * (1.0 - f));
  const auto t = static_cast<std::uint8_t>(255 * f);
  switch (sector) {
    case 0: return {v, t, 40};
    case 1: return {q, v, 40};
    case 2: return {40, v, t};
    case 3: return {40, q, v};
    case 4: return {t, 40, v};
    default: return {v, 40, q};
  }
}

std::array<Vec2, 4> drawn_outline(const OrientedBox& box) {
  if (box.cls != Det3::kPedestrian) return box_corners(box);
  const double h = std::max(box.width, box.length) / 2.0;
  return {Vec2{box.cx + h, box.cy + h}, Vec2{box.cx - h, box.cy + h}, Vec2{box.cx - h, box.cy - h},
          Vec2{box.cx + h, box.cy - h}};
}

Image render_bev(const BevConfig& cfg, std::span<const std::uint8_t> occupancy,
                 std::span<const std::uint8_t> drivable, std::span<const OrientedBox> boxes) {
  const auto plane = static_cast<std::size_t>(cfg.cells) * cfg.cells;
  if ((!occupancy.empty() && occupancy.size() != plane) || (!drivable.empty() && drivable.size() != plane)) {
    throw Error(ErrorCode::kShapeMismatch, "BEV masks do not match the render grid");
  }
  Image img(cfg.cells, cfg.cells);
  for (std::size_t c = 0; c < plane; ++c) {
    const int ix = static_cast<int>(c / cfg.cells);
    const int iy = static_cast<int>(c % cfg.cells);
    const int px = cfg.cells - 1 - iy;
    const int py = cfg.cells - 1 - ix;
    if (!drivable.empty() && drivable[c]) {
      img.set(px, py, kDrivableColor);
    } else if (!occupancy.empty() && occupancy[c]) {
      img.set(px, py, kPointColor);
    }
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto corners = drawn_outline(boxes[i]);
    const Rgb color = instance_color(i);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto a = world_to_pixel(corners[k].x, corners[k].y, cfg);
      const auto b = world_to_pixel(corners[(k + 1) % 4].x, corners[(k + 1) % 4].y, cfg);
      img.draw_line(a[0], a[1], b[0], b[1], color);
    }
  }
  return img;
}

Image render_mask(const BevConfig& cfg, std::span<const std::uint8_t> drivable) {
  return render_bev(cfg, {}, drivable, {});
}

std::string render_svg(const BevConfig& cfg, std::span<const OrientedBox> boxes) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(cfg.cells) +
                    "\" height=\"" + std::to_string(cfg.cells) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n";
  char buf[96];
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto corners = drawn_outline(boxes[i]);
    const Rgb c = instance_color(i);
    out += "<polygon fill=\"none\" stroke=\"rgb(" + std::to_string(c.r) + "," + std::to_string(c.g) + "," +
           std::to_string(c.b) + ")\" points=\"";
    for (const auto& v : corners) {
      const double half = cfg.extent / 2.0;
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", (half - v.y) / cfg.cell_size(), (half - v.x) / cfg.cell_size());
      out += buf;
    }
    out += "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace mvln
