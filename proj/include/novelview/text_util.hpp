// Copyright 2026 The novelview Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace novelview {

std::string trim(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// `key = value` with '#' comments stripped; nullopt for blank/comment lines.
/// Throws ConfigError on a non-blank line without '='.
std::optional<std::pair<std::string, std::string>> split_key_value(std::string_view line);

std::optional<double> try_parse_double(std::string_view s);
std::optional<std::int64_t> try_parse_int(std::string_view s);

/// Parses a finite float; throws SchemaError naming `what` otherwise.
float parse_float(std::string_view s, const std::string& what);

/// Shortest-safe text for float32 round trips (9 significant digits).
std::string format_float9(float v);
/// Fixed 6-decimal formatting used by reports; "inf"/"nan" for non-finite.
std::string format_metric(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace novelview
