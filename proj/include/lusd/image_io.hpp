#pragma once

#include <filesystem>

#include "lusd/attnmask.hpp"
#include "lusd/tensor.hpp"

namespace lusd {

/// Read an 8-bit RGB image (PNG, or binary PPM "P6") as a (3, H, W) tensor
/// with values in [0, 1]. Gray and alpha channels are converted to RGB.
GridTensor read_image(const std::filesystem::path& path);

/// Write a (3, H, W) tensor in [0, 1] (values are clamped) as 8-bit RGB.
/// The format follows the extension: .png or .ppm.
void write_image(const std::filesystem::path& path, const GridTensor& image);

/// Write a single-channel map in [0, 1] as binary 8-bit PGM ("P5").
void write_pgm(const std::filesystem::path& path, const Map2D& map);

}  // namespace lusd
