// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace mvln {

/// `key = value` lines; `#` starts a comment; later keys override earlier ones.
std::map<std::string, std::string> parse_key_values(std::string_view text);
std::map<std::string, std::string> load_key_values(const std::filesystem::path& path);

double parse_double(std::string_view key, std::string_view value);
int parse_int(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);

}  // namespace mvln
