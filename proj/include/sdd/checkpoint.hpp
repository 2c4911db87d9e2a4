#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdd/mask.hpp"
#include "sdd/params.hpp"

namespace sdd {

// Binary layout, all integers little-endian:
//   "SDD1" | version u32 | tensor count u32 |
//   per tensor: name length u16, UTF-8 name, dtype u8 (0 = f32, 1 = u8),
//               rank u8, dims u32 x rank, row-major payload.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> data;
};

std::vector<std::uint8_t> encode_checkpoint(std::span<const CheckpointTensor> tensors);
std::vector<CheckpointTensor> decode_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_params(const ParamSet& params);
ParamSet decode_params(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mask(const Mask& mask);
Mask decode_mask(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and rename so readers never see a
/// partial checkpoint.
void save_params(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_params(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const Mask& mask);
Mask load_mask(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace sdd
