#pragma once

#include <filesystem>

#include "focalspec/image.hpp"

namespace focalspec {

/// Reads an 8/16-bit gray/gray+alpha/RGB/RGBA PNG or a float PFM, scaled to
/// [0, 1] for PNG. Alpha is dropped.
Image read_image(const std::filesystem::path& path);

Image read_png(const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

/// Values are clamped to [0, 1]; 1 or 3 channels; bit_depth 8 or 16.
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);
void write_pfm(const std::filesystem::path& path, const Image& image);

}  // namespace focalspec
