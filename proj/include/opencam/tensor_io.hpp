#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include <json.hpp>

#include "opencam/tensor.hpp"

namespace opencam {

// OPENCAM1 layout, all integers little-endian:
//   magic   8 bytes  "OPENCAM1"
//   version u16      (currently 1)
//   ndim    u8       (2 or 3)
//   dims    ndim x u32
//   payload float32 x product(dims), row-major, channel-last
inline constexpr std::string_view kTensorMagic = "OPENCAM1";
inline constexpr std::uint16_t kTensorVersion = 1;

std::size_t tensor_file_size(const Tensor& t);

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Shortest decimal representation of a float, as a double (so -0.2f is
/// recorded as -0.2 rather than -0.20000000298).
double float_to_json_number(float v);

}  // namespace opencam
