#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace opencam {

/// Double-precision single-channel plane used for all internal numerics.
/// Row-major, `rows * cols` elements.
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
};

/// Dense real tensor: dims are (height, width) or (height, width, channels),
/// stored row-major and channel-last as float32. Elements are always finite.
class Tensor {
 public:
  Tensor() = default;

  /// 2-D tensor (channels == 1, ndim == 2).
  Tensor(std::size_t rows, std::size_t cols, float fill = 0.0f);
  /// 3-D tensor (ndim == 3), even when channels == 1.
  Tensor(std::size_t rows, std::size_t cols, std::size_t channels, float fill = 0.0f);

  /// Builds from explicit dims and data; validates the size and finiteness.
  static Tensor from_data(std::vector<std::uint32_t> dims, std::vector<float> data);

  /// Collects planes into a tensor. One plane yields a 2-D tensor unless
  /// `force_3d` is set.
  static Tensor from_planes(const std::vector<Grid>& planes, bool force_3d = false);
  static Tensor from_plane(const Grid& plane) { return from_planes({plane}); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t channels() const { return channels_; }
  std::size_t ndim() const { return ndim_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::vector<std::uint32_t> dims() const;

  /// True when rows, cols and channels agree (ndim may differ).
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && channels_ == other.channels_;
  }

  float& at(std::size_t r, std::size_t c, std::size_t ch = 0) {
    return data_[(r * cols_ + c) * channels_ + ch];
  }
  float at(std::size_t r, std::size_t c, std::size_t ch = 0) const {
    return data_[(r * cols_ + c) * channels_ + ch];
  }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  Grid plane(std::size_t channel) const;
  std::vector<Grid> planes() const;

  float min() const;
  float max() const;
  double sum() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.ndim_ == b.ndim_ && a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t channels_ = 1;
  std::size_t ndim_ = 2;
  std::vector<float> data_;
};

}  // namespace opencam
