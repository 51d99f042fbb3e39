#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "irm/tape.hpp"

namespace irm {

enum class DType : std::uint8_t { f64 = 1, f32 = 2 };

// Named n-d array, row-major. Values are held as double regardless of the
// on-disk precision.
struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;
  DType dtype = DType::f64;

  std::size_t element_count() const;
  bool operator==(const NamedArray&) const = default;
};

// Flat container format, little-endian:
//   "IRMARR01" | u32 count | per array:
//     u32 name_len | name bytes | u8 dtype | u32 rank | i64 dims[rank] | payload
// f64 payloads round-trip bit-exactly.
void write_arrays(const std::filesystem::path& path, std::span<const NamedArray> arrays);
std::vector<NamedArray> read_arrays(const std::filesystem::path& path);

std::string encode_arrays(std::span<const NamedArray> arrays);
std::vector<NamedArray> decode_arrays(const std::string& bytes);

NamedArray to_array(const std::string& name, const nn::Matrix& m);
nn::Matrix to_matrix(const NamedArray& array);

// Writes every parameter under its own name.
void save_parameters(const std::filesystem::path& path, std::span<nn::Parameter* const> params);

// Loads values by name. Missing names or shape mismatches throw.
void load_parameters(const std::filesystem::path& path, std::span<nn::Parameter* const> params);

// Writes `contents` to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace irm
