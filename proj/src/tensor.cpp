#include "opencam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "opencam/error.hpp"

namespace opencam {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorCode::InvalidTensor: return "InvalidTensor";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::DegenerateNoise: return "DegenerateNoise";
    case ErrorCode::DegenerateKey: return "DegenerateKey";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::FileMissing: return "FileMissing";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingStudy: return "MissingStudy";
  }
  return "Unknown";
}

namespace {

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw Error(ErrorCode::InvalidTensor, std::string(what) + " must be positive");
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), channels_(1), ndim_(2), data_(rows * cols, fill) {
  require_positive(rows, "rows");
  require_positive(cols, "cols");
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::size_t channels, float fill)
    : rows_(rows), cols_(cols), channels_(channels), ndim_(3), data_(rows * cols * channels, fill) {
  require_positive(rows, "rows");
  require_positive(cols, "cols");
  require_positive(channels, "channels");
}

Tensor Tensor::from_data(std::vector<std::uint32_t> dims, std::vector<float> data) {
  if (dims.size() != 2 && dims.size() != 3) {
    throw Error(ErrorCode::InvalidTensor, "ndim must be 2 or 3, got " + std::to_string(dims.size()));
  }
  std::size_t expected = 1;
  for (auto d : dims) {
    require_positive(d, "dimension");
    expected *= d;
  }
  if (expected != data.size()) {
    throw Error(ErrorCode::InvalidTensor, "dims product " + std::to_string(expected) +
                                              " != data length " + std::to_string(data.size()));
  }
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidTensor, "tensor contains non-finite values");
  }
  Tensor t;
  t.rows_ = dims[0];
  t.cols_ = dims[1];
  t.channels_ = dims.size() == 3 ? dims[2] : 1;
  t.ndim_ = dims.size();
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::from_planes(const std::vector<Grid>& planes, bool force_3d) {
  if (planes.empty()) throw Error(ErrorCode::InvalidTensor, "no planes");
  const auto rows = planes.front().rows;
  const auto cols = planes.front().cols;
  const auto nch = planes.size();
  Tensor t = (nch == 1 && !force_3d) ? Tensor(rows, cols) : Tensor(rows, cols, nch);
  for (std::size_t ch = 0; ch < nch; ++ch) {
    const Grid& g = planes[ch];
    if (g.rows != rows || g.cols != cols) throw Error(ErrorCode::DimMismatch, "plane shapes differ");
    for (std::size_t i = 0; i < rows * cols; ++i) {
      const double v = g.data[i];
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidTensor, "non-finite value in plane");
      t.data_[i * nch + ch] = static_cast<float>(v);
    }
  }
  return t;
}

std::vector<std::uint32_t> Tensor::dims() const {
  std::vector<std::uint32_t> d{static_cast<std::uint32_t>(rows_), static_cast<std::uint32_t>(cols_)};
  if (ndim_ == 3) d.push_back(static_cast<std::uint32_t>(channels_));
  return d;
}

Grid Tensor::plane(std::size_t channel) const {
  if (channel >= channels_) throw Error(ErrorCode::ChannelMismatch, "channel out of range");
  Grid g(rows_, cols_);
  for (std::size_t i = 0; i < rows_ * cols_; ++i) g.data[i] = data_[i * channels_ + channel];
  return g;
}

std::vector<Grid> Tensor::planes() const {
  std::vector<Grid> out;
  out.reserve(channels_);
  for (std::size_t ch = 0; ch < channels_; ++ch) out.push_back(plane(ch));
  return out;
}

float Tensor::min() const {
  return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

float Tensor::max() const {
  return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0,
                         [](double acc, float v) { return acc + static_cast<double>(v); });
}

}  // namespace opencam
