#pragma once

#include "evdvsr/image.hpp"

#include <filesystem>

namespace evdvsr {

/// Reads an 8-bit PNG as RGB (or gray when `gray` is set), scaled to [0,1].
Image read_png(const std::filesystem::path& path, bool gray = false);

/// Writes 1- or 3-channel images as 8-bit PNG; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace evdvsr
