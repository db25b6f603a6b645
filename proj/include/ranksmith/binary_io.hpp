// Copyright 2026 The Ranksmith Authors.
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

// Little-endian readers and writers shared by the feature, model and index
// file formats.

#ifndef RANKSMITH_BINARY_IO_HPP_
#define RANKSMITH_BINARY_IO_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "ranksmith/error.hpp"

namespace ranksmith::io {

template <typename T>
T to_little_endian(T v) {
  static_assert(std::is_integral_v<T>);
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(v);
    U r = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      r = static_cast<U>((r << 8) | (u & 0xFF));
      u = static_cast<U>(u >> 8);
    }
    return static_cast<T>(r);
  } else {
    return v;
  }
}

class Writer {
 public:
  explicit Writer(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }

  void magic(std::string_view m) { bytes(m.data(), m.size()); }

  template <typename T>
  void integer(T v) {
    const T le = to_little_endian(v);
    bytes(&le, sizeof(T));
  }

  void u8(std::uint8_t v) { integer(v); }
  void u32(std::uint32_t v) { integer(v); }
  void u64(std::uint64_t v) { integer(v); }
  void i32(std::int32_t v) { integer(v); }
  void i64(std::int64_t v) { integer(v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void close() {
    out_.flush();
    if (!out_) throw IoError("write to '" + path_ + "' failed");
    out_.close();
  }

 private:
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw IoError("write to '" + path_ + "' failed");
  }

  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path + "' for reading");
  }

  /// Throws ParseError unless the next bytes equal `m`.
  void expect_magic(std::string_view m) {
    std::string got(m.size(), '\0');
    bytes(got.data(), got.size(), "magic");
    if (got != m) {
      throw ParseError(path_ + ": bad magic at offset 0, expected '" +
                       std::string(m) + "'");
    }
  }

  template <typename T>
  T integer(const char* what) {
    T v{};
    bytes(&v, sizeof(T), what);
    return to_little_endian(v);
  }

  std::uint8_t u8(const char* what) { return integer<std::uint8_t>(what); }
  std::uint32_t u32(const char* what) { return integer<std::uint32_t>(what); }
  std::uint64_t u64(const char* what) { return integer<std::uint64_t>(what); }
  std::int32_t i32(const char* what) { return integer<std::int32_t>(what); }
  std::int64_t i64(const char* what) { return integer<std::int64_t>(what); }
  double f64(const char* what) {
    return std::bit_cast<double>(integer<std::uint64_t>(what));
  }

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& path() const noexcept { return path_; }

  /// Fails if bytes remain after the last expected field.
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw ParseError(path_ + ": trailing bytes at offset " +
                       std::to_string(offset_));
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(path_ + ": " + msg + " at offset " +
                     std::to_string(offset_));
  }

 private:
  void bytes(void* p, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw ParseError(path_ + ": truncated " + what + " at offset " +
                       std::to_string(offset_));
    }
    offset_ += n;
  }

  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

}  // namespace ranksmith::io

#endif  // RANKSMITH_BINARY_IO_HPP_
