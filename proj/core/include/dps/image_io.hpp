#pragma once

#include <filesystem>

#include "dps/image.hpp"

namespace dps {

/// Decodes an 8-bit grayscale or RGB PNG into [0,1] reals (v / 255).
/// Throws ConfigError naming the file on anything undecodable.
ImageTensor read_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG; values are clamped to [0,1] here and nowhere earlier.
void write_image(const ImageTensor& image, const std::filesystem::path& path);

}  // namespace dps
