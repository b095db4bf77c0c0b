#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "darnet/tensor.hpp"

namespace darnet {

// Binary container of named float tensors:
//   "DARN" | u32 version | u32 count |
//   count x ( u32 name_len | name | u32 rank | rank x u32 dim | f32 data... )
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor<float> tensor;

    bool operator==(const NamedTensor&) const = default;
};

std::string serialize_checkpoint(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

// 64-bit FNV-1a of a file's bytes; used to show files were left untouched.
std::uint64_t file_checksum(const std::filesystem::path& path);

} // namespace darnet
