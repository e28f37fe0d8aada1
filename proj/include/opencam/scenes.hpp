#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "opencam/rng.hpp"
#include "opencam/tensor.hpp"

namespace opencam {

/// Natural-image stand-in: a 1/f^2 background with an illumination ramp and
/// a handful of soft-edged discs and boxes, values in [0, 1].
Tensor synthetic_scene(std::size_t rows, std::size_t cols, std::size_t channels, Rng& rng);

struct NamedScene {
  std::string id;
  Tensor scene;
};

/// `count` synthetic scenes, scene i drawn from stream i of `seed`.
std::vector<NamedScene> builtin_scenes(std::size_t count, std::size_t rows, std::size_t cols, std::size_t channels,
                                       std::uint64_t seed);

/// All *.png files in `dir` (sorted by name), bilinearly resized to rows x cols.
std::vector<NamedScene> load_scene_directory(const std::filesystem::path& dir, std::size_t rows, std::size_t cols,
                                             std::size_t channels);

Tensor resize_bilinear(const Tensor& t, std::size_t rows, std::size_t cols);

}  // namespace opencam
