// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/detection_io.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "mvln/error.hpp"
#include "mvln/pointcloud_io.hpp"

namespace mvln {
namespace {

std::string format_line(const OrientedBox& b) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s %.6f %.6f %.6f %.6f %.6f %.6f", std::string(det3_name(b.cls)).c_str(), b.cx,
                b.cy, b.width, b.length, b.yaw, b.confidence);
  return buf;
}

std::vector<std::string> tokens(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

OrientedBox parse_fields(const std::vector<std::string>& f, std::size_t first, std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kMalformedFile, "detection line " + std::to_string(line_no) + ": " + why);
  };
  if (f.size() != first + 7) throw fail("expected 7 fields after the frame column");
  const auto cls = det3_from_name(f[first]);
  if (!cls) throw fail("unknown class '" + f[first] + "'");
  double v[6];
  for (int i = 0; i < 6; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(f[first + 1 + i], &used);
      if (used != f[first + 1 + i].size()) throw fail("bad number '" + f[first + 1 + i] + "'");
    } catch (const std::logic_error&) {
      throw fail("bad number '" + f[first + 1 + i] + "'");
    }
  }
  return OrientedBox{v[0], v[1], v[2], v[3], v[4], *cls, v[5]};
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto f = tokens(line);
    if (!f.empty()) fn(f, line_no);
  }
}

}  // namespace

std::string format_detections(std::span<const OrientedBox> boxes) {
  std::string out;
  for (const auto& b : boxes) out += format_line(b) + "\n";
  return out;
}

std::vector<OrientedBox> parse_detections(std::string_view text) {
  std::vector<OrientedBox> out;
  for_each_line(text, [&](const std::vector<std::string>& f, std::size_t n) { out.push_back(parse_fields(f, 0, n)); });
  return out;
}

std::vector<OrientedBox> load_detections(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_detections(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_frame_detections(const std::map<std::string, std::vector<OrientedBox>>& frames) {
  std::string out;
  for (const auto& [frame, boxes] : frames) {
    for (const auto& b : boxes) out += frame + " " + format_line(b) + "\n";
  }
  return out;
}

std::map<std::string, std::vector<OrientedBox>> parse_frame_detections(std::string_view text) {
  std::map<std::string, std::vector<OrientedBox>> out;
  for_each_line(text, [&](const std::vector<std::string>& f, std::size_t n) {
    out[f.front()].push_back(parse_fields(f, 1, n));
  });
  return out;
}

std::string detections_to_json(std::span<const OrientedBox> boxes) {
  auto arr = nlohmann::json::array();
  for (const auto& b : boxes) {
    arr.push_back({{"class", std::string(det3_name(b.cls))},
                   {"cx", b.cx},
                   {"cy", b.cy},
                   {"width", b.width},
                   {"length", b.length},
                   {"yaw", b.yaw},
                   {"confidence", b.confidence}});
  }
  return arr.dump(2);
}

std::vector<OrientedBox> detections_from_json(std::string_view text) {
  std::vector<OrientedBox> out;
  try {
    const auto arr = nlohmann::json::parse(text);
    for (const auto& o : arr) {
      const auto cls = det3_from_name(o.at("class").get<std::string>());
      if (!cls) throw Error(ErrorCode::kMalformedFile, "unknown detection class");
      out.push_back(OrientedBox{o.at("cx").get<double>(), o.at("cy").get<double>(), o.at("width").get<double>(),
                                o.at("length").get<double>(), o.at("yaw").get<double>(), *cls,
                                o.at("confidence").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("detection JSON: ") + e.what());
  }
  return out;
}

}  // namespace mvln
