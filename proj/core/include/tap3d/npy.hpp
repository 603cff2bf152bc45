#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tap3d::npy {

enum class DType { Bool, UInt8, Int32, Int64, Float32, Float64 };

std::size_t item_size(DType dtype);
/// Array-protocol type string, e.g. "<f8" or "|b1".
std::string descr(DType dtype);

/// Little-endian, C-order array as stored in a .npy container.
struct Array {
  DType dtype = DType::Float64;
  std::vector<std::size_t> shape;
  std::vector<std::byte> data;

  std::size_t size() const;  ///< number of elements
  bool operator==(const Array&) const = default;
};

Array make_float64(std::vector<std::size_t> shape, std::span<const double> values);
Array make_float32(std::vector<std::size_t> shape, std::span<const double> values);
Array make_bool(std::vector<std::size_t> shape, std::span<const std::uint8_t> values);
Array make_int32(std::vector<std::size_t> shape, std::span<const std::int32_t> values);

/// Elements widened to double. Throws UnsupportedDtype for non-float arrays.
std::vector<double> to_float64(const Array& array);
/// Elements as 0/1 flags; any nonzero byte reads as 1. Bool or uint8 only.
std::vector<std::uint8_t> to_flags(const Array& array);
/// Elements as int32. Int32, uint8 and bool arrays only.
std::vector<std::int32_t> to_int32(const Array& array);

/// Parses a complete .npy image. Accepts format versions 1.0 and 2.0.
/// Throws BadMagic, BadHeader, UnsupportedDtype, UnsupportedLayout or TruncatedData.
Array parse(std::span<const std::byte> bytes);

/// Canonical encoding: version 1.0 when the header fits, header padded with
/// spaces and a newline so the data starts on a 64-byte boundary.
std::vector<std::byte> serialize(const Array& array);

Array read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Array& array);

}  // namespace tap3d::npy
