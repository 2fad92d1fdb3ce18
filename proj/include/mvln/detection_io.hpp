// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvln/postprocess.hpp"

namespace mvln {

// Text format: one object per line, `class cx cy width length yaw confidence`,
// class by name, numbers with 6 decimals. The multi-frame variant prefixes a
// frame id column. Blank lines and `#` comments are ignored on input.

std::string format_detections(std::span<const OrientedBox> boxes);
std::vector<OrientedBox> parse_detections(std::string_view text);
std::vector<OrientedBox> load_detections(const std::filesystem::path& path);

std::string format_frame_detections(const std::map<std::string, std::vector<OrientedBox>>& frames);
std::map<std::string, std::vector<OrientedBox>> parse_frame_detections(std::string_view text);

/// JSON array of {"class", "cx", "cy", "width", "length", "yaw", "confidence"}.
std::string detections_to_json(std::span<const OrientedBox> boxes);
std::vector<OrientedBox> detections_from_json(std::string_view text);

}  // namespace mvln
