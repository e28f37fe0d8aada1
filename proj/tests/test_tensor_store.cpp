#include <doctest.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "opencam/error.hpp"
#include "opencam/png_io.hpp"
#include "opencam/tensor_io.hpp"
#include "test_util.hpp"

using namespace opencam;

namespace {

std::vector<unsigned char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// Writes a gray or RGB PNG with libpng, 8 or 16 bits per sample.
void write_png(const std::filesystem::path& p, std::size_t w, std::size_t h, int color_type, int depth,
               const std::vector<unsigned>& samples) {
  FILE* fp = std::fopen(p.c_str(), "wb");
  REQUIRE(fp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t spp = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  std::vector<unsigned char> row((w * spp * depth + 7) / 8);
  for (std::size_t r = 0; r < h; ++r) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t i = 0; i < w * spp; ++i) {
      const unsigned v = samples[r * w * spp + i];
      if (depth == 16) {
        row[2 * i] = static_cast<unsigned char>(v >> 8);
        row[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
      } else {
        // Sub-byte depths pack most significant sample first.
        const std::size_t bit = i * depth;
        row[bit / 8] |= static_cast<unsigned char>(v << (8 - depth - bit % 8));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

TEST_CASE("tensor invariants") {
  CHECK_ERROR_CODE(Tensor::from_data({2, 2}, {1, 2, 3}), ErrorCode::InvalidTensor);
  CHECK_ERROR_CODE(Tensor::from_data({1, 1}, {NAN}), ErrorCode::InvalidTensor);
  CHECK_ERROR_CODE(Tensor::from_data({1, 1, 1, 1}, {0.0f}), ErrorCode::InvalidTensor);
  const Tensor t = Tensor::from_data({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at(1, 0) == 3.0f);
  CHECK(t.ndim() == 2);
  const Tensor c(2, 2, std::size_t{3});
  CHECK(c.ndim() == 3);
  CHECK(c.size() == 12);
}

TEST_CASE("write then read is bit-exact") {
  const auto dir = testutil::scratch("tensor_roundtrip");
  Rng rng(11);
  const Tensor t = testutil::random_tensor(5, 7, 3, rng, -1e3, 1e3);
  write_tensor(t, dir / "t.ocam");
  CHECK(read_tensor(dir / "t.ocam") == t);
}

TEST_CASE("1000 random tensors round-trip bit-exactly") {
  const auto dir = testutil::scratch("tensor_many");
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t rows = 1 + rng.below(9), cols = 1 + rng.below(9);
    const std::size_t ch = rng.below(2) ? 3 : 1;
    Tensor t = ch == 1 && rng.below(2) ? Tensor(rows, cols) : Tensor(rows, cols, ch);
    for (auto& v : t.values()) {
      // Mix of magnitudes, signed zeros and subnormals.
      const double u = rng.uniform();
      v = u < 0.05 ? -0.0f : u < 0.1 ? 1e-40f : static_cast<float>(rng.normal() * std::pow(10.0, rng.uniform(-20, 20)));
    }
    const auto p = dir / "x.ocam";
    write_tensor(t, p);
    const Tensor back = read_tensor(p);
    REQUIRE(back.dims() == t.dims());
    REQUIRE(std::memcmp(back.values().data(), t.values().data(), t.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("header layout and sizes") {
  const auto dir = testutil::scratch("tensor_header");
  write_tensor(Tensor(2, 3), dir / "z.ocam");
  const auto b = file_bytes(dir / "z.ocam");
  REQUIRE(b.size() == 8 + 2 + 1 + 2 * 4 + 24);
  CHECK(std::string(b.begin(), b.begin() + 8) == "OPENCAM1");
  CHECK(b[8] == 1);
  CHECK(b[9] == 0);
  CHECK(b[10] == 2);
  CHECK(b[11] == 2);
  CHECK(b[15] == 3);
  for (std::size_t i = 19; i < b.size(); ++i) CHECK(b[i] == 0);

  // 1x1: 8 magic + 2 version + 1 ndim + 2*4 dims + 4 payload.
  write_tensor(Tensor(1, 1, 0.5f), dir / "one.ocam");
  CHECK(file_bytes(dir / "one.ocam").size() == 23);
  CHECK(tensor_file_size(Tensor(1, 1)) == 23);

  write_tensor(Tensor(4, 4, std::size_t{3}), dir / "rgb.ocam");
  const auto rgb = file_bytes(dir / "rgb.ocam");
  CHECK(rgb[10] == 3);
  CHECK(rgb.size() == 8 + 2 + 1 + 12 + 4 * 48);
}

TEST_CASE("read errors") {
  const auto dir = testutil::scratch("tensor_errors");
  write_tensor(Tensor(2, 2, 1.0f), dir / "ok.ocam");
  auto b = file_bytes(dir / "ok.ocam");

  auto bad = b;
  bad[7] = '2';
  write_bytes(dir / "magic.ocam", bad);
  CHECK_ERROR_CODE(read_tensor(dir / "magic.ocam"), ErrorCode::BadMagic);

  auto trunc = b;
  trunc.resize(trunc.size() - 3);
  write_bytes(dir / "trunc.ocam", trunc);
  CHECK_ERROR_CODE(read_tensor(dir / "trunc.ocam"), ErrorCode::TruncatedPayload);

  write_bytes(dir / "short.ocam", {'O', 'P', 'E', 'N'});
  CHECK_ERROR_CODE(read_tensor(dir / "short.ocam"), ErrorCode::BadMagic);

  auto ver = b;
  ver[8] = 2;
  write_bytes(dir / "ver.ocam", ver);
  CHECK_ERROR_CODE(read_tensor(dir / "ver.ocam"), ErrorCode::UnsupportedVersion);

  CHECK_ERROR_CODE(write_tensor(Tensor(1, 1), "/nonexistent_dir_xyz/t.ocam"), ErrorCode::IoFailure);
}

TEST_CASE("PNG import") {
  const auto dir = testutil::scratch("png_import");
  write_png(dir / "white.png", 4, 3, PNG_COLOR_TYPE_GRAY, 8, std::vector<unsigned>(12, 255));
  const Tensor white = load_png_as_scene(dir / "white.png", 1);
  CHECK(white.rows() == 3);
  CHECK(white.cols() == 4);
  for (float v : white.values()) CHECK(v == 1.0f);

  write_png(dir / "black.png", 4, 3, PNG_COLOR_TYPE_RGB, 8, std::vector<unsigned>(36, 0));
  const Tensor black = load_png_as_scene(dir / "black.png", 3);
  for (float v : black.values()) CHECK(v == 0.0f);

  write_png(dir / "half16.png", 2, 2, PNG_COLOR_TYPE_GRAY, 16, std::vector<unsigned>(4, 32768));
  const Tensor half = load_png_as_scene(dir / "half16.png", 1);
  for (float v : half.values()) {
    CHECK(v == doctest::Approx(32768.0 / 65535.0).epsilon(1e-7));
  }

  // Luma weights on a pure-red pixel.
  write_png(dir / "red.png", 1, 1, PNG_COLOR_TYPE_RGB, 8, {255, 0, 0});
  CHECK(load_png_as_scene(dir / "red.png", 1).at(0, 0) == doctest::Approx(0.299).epsilon(1e-6));
  const Tensor red3 = load_png_as_scene(dir / "red.png", 3);
  CHECK(red3.at(0, 0, 0) == 1.0f);
  CHECK(red3.at(0, 0, 1) == 0.0f);

  write_png(dir / "four.png", 2, 2, PNG_COLOR_TYPE_GRAY, 4, {0, 5, 10, 15});
  CHECK_ERROR_CODE(load_png_as_scene(dir / "four.png", 1), ErrorCode::UnsupportedBitDepth);

  write_bytes(dir / "junk.png", {1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK_ERROR_CODE(load_png_as_scene(dir / "junk.png", 1), ErrorCode::DecodeFailure);
}

TEST_CASE("PNG visualization") {
  const auto dir = testutil::scratch("png_vis");
  save_png_visualization(Tensor(3, 3, 0.7f), dir / "const.png", true);
  const Tensor const_png = load_png_as_scene(dir / "const.png", 1);
  for (float v : const_png.values()) CHECK(v == doctest::Approx(128.0 / 255.0));

  Tensor ramp(1, 5);
  for (std::size_t c = 0; c < 5; ++c) ramp.at(0, c) = static_cast<float>(c) / 4.0f;
  save_png_visualization(ramp, dir / "ramp.png", false);
  const Tensor back = load_png_as_scene(dir / "ramp.png", 1);
  for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(back.at(0, c) - ramp.at(0, c)) <= 0.5 / 255.0 + 1e-7);

  Tensor ext(2, 2, 0.5f);
  ext.at(0, 0) = -0.2f;
  ext.at(1, 1) = 3.1f;
  save_png_visualization(ext, dir / "ext.png", true);
  const auto side = read_json(sidecar_path(dir / "ext.png"));
  CHECK(side.at("min").dump() == "-0.2");
  CHECK(side.at("max").dump() == "3.1");

  // Round trip through the normalized 8-bit mapping.
  Rng rng(5);
  const Tensor t = testutil::random_tensor(16, 16, 3, rng, -2.0, 5.0);
  save_png_visualization(t, dir / "rt.png", true);
  const Tensor loaded = load_png_as_scene(dir / "rt.png", 3);
  const double lo = t.min(), hi = t.max();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double mapped = (t.values()[i] - lo) / (hi - lo);
    CHECK(std::abs(loaded.values()[i] - mapped) <= 1.0 / 255.0);
  }
  CHECK_ERROR_CODE(save_png_visualization(t, "/nonexistent_dir_xyz/a.png", true), ErrorCode::IoFailure);
}
