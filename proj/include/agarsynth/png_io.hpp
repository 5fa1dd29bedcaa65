#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "agarsynth/raster.hpp"

namespace agarsynth {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 8-bit PNG at the boundary; values are quantized as round(255 * v).

ImageRGB read_png_rgb(const std::filesystem::path& path);
/// Reads RGBA; an RGB file gets an opaque alpha channel.
RgbaFragment read_png_rgba(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const ImageRGB& img);
void write_png(const std::filesystem::path& path, const RgbaFragment& frag);

std::uint8_t to_byte(double v);

}  // namespace agarsynth
