#include "opencam/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "opencam/error.hpp"

namespace opencam {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <typename T>
T get_le(const unsigned char* p) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::size_t tensor_file_size(const Tensor& t) {
  return kTensorMagic.size() + 2 + 1 + 4 * t.ndim() + 4 * t.size();
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::vector<unsigned char> buf;
  buf.reserve(tensor_file_size(t));
  buf.insert(buf.end(), kTensorMagic.begin(), kTensorMagic.end());
  put_le<std::uint16_t>(buf, kTensorVersion);
  put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(t.ndim()));
  for (auto d : t.dims()) put_le<std::uint32_t>(buf, d);
  for (float v : t.values()) put_le<float>(buf, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const std::size_t fixed = kTensorMagic.size() + 3;
  if (buf.size() < kTensorMagic.size() ||
      std::memcmp(buf.data(), kTensorMagic.data(), kTensorMagic.size()) != 0) {
    throw Error(ErrorCode::BadMagic, path.string() + " is not an OPENCAM1 tensor");
  }
  if (buf.size() < fixed) throw Error(ErrorCode::TruncatedPayload, "header truncated");
  const auto version = get_le<std::uint16_t>(buf.data() + 8);
  if (version != kTensorVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "tensor version " + std::to_string(version));
  }
  const std::size_t ndim = buf[10];
  if (ndim != 2 && ndim != 3) throw Error(ErrorCode::InvalidTensor, "ndim must be 2 or 3");
  if (buf.size() < fixed + 4 * ndim) throw Error(ErrorCode::TruncatedPayload, "dims truncated");

  std::vector<std::uint32_t> dims(ndim);
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    dims[i] = get_le<std::uint32_t>(buf.data() + fixed + 4 * i);
    count *= dims[i];
  }
  const std::size_t offset = fixed + 4 * ndim;
  if (buf.size() != offset + 4 * count) {
    throw Error(ErrorCode::TruncatedPayload, "expected " + std::to_string(4 * count) +
                                                 " payload bytes, found " +
                                                 std::to_string(buf.size() - offset));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = get_le<float>(buf.data() + offset + 4 * i);
  return Tensor::from_data(std::move(dims), std::move(data));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  write_text(j.dump(2) + "\n", path);
}

double float_to_json_number(float v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return static_cast<double>(v);
  return std::stod(std::string(buf.data(), end));
}

}  // namespace opencam
