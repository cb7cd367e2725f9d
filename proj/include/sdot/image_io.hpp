#pragma once

#include "sdot/density.hpp"

#include <string>

namespace sdot {

/// Reads a binary PGM (P5, 8- or 16-bit) or a PNG (converted to gray) and
/// maps samples linearly to [0, 1]; with `invert`, dark pixels become dense
/// (v -> 1 - v). Throws Error(Io) on unreadable or malformed files.
GrayImage read_gray_image(const std::string& path, bool invert = false);

GrayImage read_pgm(const std::string& path);
GrayImage read_png(const std::string& path);

/// Writes values in [0, 1] as 8-bit (maxval 255) or 16-bit (maxval 65535) P5.
void write_pgm(const std::string& path, const GrayImage& image, bool sixteen_bit = false);
/// 8-bit grayscale PNG, values in [0, 1].
void write_png(const std::string& path, const GrayImage& image);

}  // namespace sdot
