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

#include <filesystem>
#include <map>
#include <string>

#include "novelview/tensor.hpp"

namespace novelview {

/// Binary container: 8-byte magic, a UTF-8 text block, then named tensors
/// (name, rank, int64 dims, little-endian float32 data).
struct Archive {
  std::string text;
  std::map<std::string, Tensor> tensors;
};

void write_archive(const std::filesystem::path& path, const std::string& magic, const Archive& archive);
/// Throws IoError naming the path on a missing file, bad magic or truncation.
Archive read_archive(const std::filesystem::path& path, const std::string& magic);

}  // namespace novelview
