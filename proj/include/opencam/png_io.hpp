#pragma once

#include <filesystem>

#include "opencam/tensor.hpp"

namespace opencam {

/// Loads an 8- or 16-bit PNG scaled to [0,1]. `channels` is 1 (luma with
/// weights 0.299/0.587/0.114) or 3. Alpha is discarded.
Tensor load_png_as_scene(const std::filesystem::path& path, int channels);

/// Writes an 8-bit grayscale or RGB PNG plus a `<path>.json` sidecar holding
/// the tensor's {min, max}. With `normalize` the range is mapped affinely
/// onto [0,255] (constant tensors become mid-gray 128); without it values
/// are clamped to [0,1] and scaled by 255.
void save_png_visualization(const Tensor& t, const std::filesystem::path& path, bool normalize);

std::filesystem::path sidecar_path(const std::filesystem::path& png_path);

}  // namespace opencam
