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

#include "novelview/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "novelview/errors.hpp"

namespace novelview {
namespace {

constexpr std::uint64_t kMaxText = std::uint64_t{1} << 30;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path) : data_(data), path_(path) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }
  [[noreturn]] void fail(const std::string& what) const { throw IoError(path_.string() + ": " + what); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) fail("truncated file");
  }
  const std::string& data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_archive(const std::filesystem::path& path, const std::string& magic, const Archive& archive) {
  static_assert(std::endian::native == std::endian::little, "float payloads are written in host order");
  std::string out = magic;
  put_u64(out, archive.text.size());
  out += archive.text;
  put_u64(out, archive.tensors.size());
  for (const auto& [name, t] : archive.tensors) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.shape().size());
    for (auto d : t.shape()) put_u64(out, static_cast<std::uint64_t>(d));
    const std::size_t bytes = static_cast<std::size_t>(t.numel()) * sizeof(float);
    const std::size_t at = out.size();
    out.resize(at + bytes);
    if (bytes) std::memcpy(out.data() + at, t.data(), bytes);
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + tmp + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp + "' to '" + path.string() + "': " + ec.message());
}

Archive read_archive(const std::filesystem::path& path, const std::string& magic) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  const std::string data{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  Reader r(data, path);
  if (r.bytes(std::min<std::uint64_t>(magic.size(), data.size())) != magic) r.fail("not a '" + magic + "' file");
  Archive a;
  const auto text_len = r.u64();
  if (text_len > kMaxText) r.fail("corrupt header");
  a.text = r.bytes(text_len);
  const auto count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.u64();
    if (name_len > 4096) r.fail("corrupt tensor name");
    std::string name = r.bytes(name_len);
    const auto rank = r.u64();
    if (rank > 8) r.fail("corrupt rank for '" + name + "'");
    Shape shape;
    std::uint64_t n = 1;
    for (std::uint64_t k = 0; k < rank; ++k) {
      const auto d = r.u64();
      if (d > (std::uint64_t{1} << 40)) r.fail("corrupt shape for '" + name + "'");
      shape.push_back(static_cast<std::int64_t>(d));
      n *= d;
    }
    const std::string payload = r.bytes(n * sizeof(float));
    Tensor t(shape);
    if (n) std::memcpy(t.data(), payload.data(), payload.size());
    if (!a.tensors.emplace(std::move(name), std::move(t)).second) r.fail("duplicate tensor name");
  }
  if (!r.done()) r.fail("trailing bytes");
  return a;
}

}  // namespace novelview
