#pragma once

// Little-endian encoding helpers shared by the ETS1 and NDS1 codecs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nnose/error.hpp"

namespace nnose::detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v);
  void bytes(std::string_view s) { buf_.append(s); }

  const std::string& data() const { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }

  std::string buf_;
};

/// Bounds-checked cursor; running off the end raises `truncated_code`.
class ByteReader {
 public:
  ByteReader(std::string_view data, ErrorCode truncated_code)
      : data_(data), truncated_code_(truncated_code) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32();
  std::string_view bytes(std::size_t n);

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::uint64_t get(int n);

  std::string_view data_;
  std::size_t pos_ = 0;
  ErrorCode truncated_code_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames, so a failed write never
/// leaves a partial artifact at `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace nnose::detail
