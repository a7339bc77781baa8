#pragma once

#include <filesystem>

#include "imls/metrics.hpp"

namespace imls {

// 8- and 16-bit gray/RGB PNG, converted to [0,1]. Alpha is dropped,
// palette images expanded to RGB.
ImageBuffer read_png(const std::filesystem::path& path);

// 8-bit PNG, 1 or 3 channels, values clamped to [0,1]
void write_png(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace imls
