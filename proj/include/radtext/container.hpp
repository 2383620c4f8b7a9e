#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace radtext {

/// Versioned binary model container shared by topic, embedding and network models.
///
/// Layout (all integers little-endian, floats IEEE-754 binary32 little-endian):
///
///     magic        4 bytes  "RTXC"
///     version      u32      kContainerVersion
///     kind_len     u16, kind bytes (UTF-8)
///     meta_count   u32
///       key_len u16, key bytes, tag u8 (0 = i64, 1 = f64, 2 = string), value
///         i64: 8 bytes; f64: 8 bytes; string: u32 length + bytes
///     matrix_count u32
///       name_len u16, name bytes, rows u32, cols u32, rows*cols f32 row-major
///
/// Metadata and matrices are written in key order so identical content
/// always produces identical bytes.
inline constexpr std::uint32_t kContainerVersion = 1;

struct Matrix32 {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;
};

using MetaValue = std::variant<std::int64_t, double, std::string>;

struct Container {
  std::string kind;
  std::map<std::string, MetaValue> meta;
  std::map<std::string, Matrix32> matrices;

  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  const Matrix32& get_matrix(const std::string& name) const;
};

std::vector<std::uint8_t> encode_container(const Container& c);
Container decode_container(std::span<const std::uint8_t> bytes);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

/// Packs a row-major double matrix into a binary32 matrix.
Matrix32 to_matrix32(std::size_t rows, std::size_t cols, std::span<const double> values);
std::vector<double> from_matrix32(const Matrix32& m);

}  // namespace radtext
