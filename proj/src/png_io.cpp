#include "opencam/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "opencam/error.hpp"
#include "opencam/tensor_io.hpp"

namespace opencam {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Tensor load_png_as_scene(const std::filesystem::path& path, int channels) {
  if (channels != 1 && channels != 3) throw Error(ErrorCode::InvalidSpec, "channels must be 1 or 3");
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::FileMissing, "cannot open " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::DecodeFailure, path.string() + " is not a PNG");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::DecodeFailure, "libpng initialisation failed");
  }

  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::DecodeFailure, "corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);

  if (color_type != PNG_COLOR_TYPE_PALETTE && bit_depth != 8 && bit_depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::UnsupportedBitDepth, "bit depth " + std::to_string(bit_depth));
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (bit_depth == 16) png_set_swap(png);  // host order for uint16 reads
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int src_channels = png_get_channels(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  row_ptrs.resize(height);
  for (std::size_t r = 0; r < height; ++r) row_ptrs[r] = pixels.data() + r * rowbytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const double scale = depth == 16 ? 65535.0 : 255.0;
  auto sample = [&](std::size_t r, std::size_t c, int ch) -> double {
    if (depth == 16) {
      std::uint16_t v;
      std::memcpy(&v, row_ptrs[r] + 2 * (c * src_channels + ch), 2);
      return v / scale;
    }
    return row_ptrs[r][c * src_channels + ch] / scale;
  };

  Tensor out = channels == 1 ? Tensor(height, width) : Tensor(height, width, std::size_t{3});
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      double rgb[3];
      for (int ch = 0; ch < 3; ++ch) rgb[ch] = sample(r, c, src_channels >= 3 ? ch : 0);
      if (channels == 1) {
        out.at(r, c) = static_cast<float>(src_channels >= 3
                                              ? 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]
                                              : rgb[0]);
      } else {
        for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = static_cast<float>(rgb[ch]);
      }
    }
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& png_path) {
  return std::filesystem::path(png_path.string() + ".json");
}

void save_png_visualization(const Tensor& t, const std::filesystem::path& path, bool normalize) {
  if (t.channels() != 1 && t.channels() != 3) {
    throw Error(ErrorCode::InvalidDims, "visualization needs 1 or 3 channels");
  }
  const float lo = t.min();
  const float hi = t.max();
  const double range = static_cast<double>(hi) - static_cast<double>(lo);

  const std::size_t nch = t.channels();
  std::vector<png_byte> pixels(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = t.values()[i];
    double mapped;
    if (normalize) {
      mapped = range > 0.0 ? (v - lo) / range * 255.0 : 128.0;
    } else {
      mapped = std::clamp(v, 0.0, 1.0) * 255.0;
    }
    pixels[i] = static_cast<png_byte>(std::clamp(std::lround(mapped), 0L, 255L));
  }

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "libpng initialisation failed");
  }
  std::vector<png_bytep> rows(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) rows[r] = pixels.data() + r * t.cols() * nch;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoFailure, "PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(t.cols()), static_cast<png_uint_32>(t.rows()), 8,
               nch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  fp.reset();

  nlohmann::json side = {{"min", float_to_json_number(lo)},
                         {"max", float_to_json_number(hi)},
                         {"normalize", normalize}};
  write_json(side, sidecar_path(path));
}

}  // namespace opencam
