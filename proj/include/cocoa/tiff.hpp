#pragma once

// Minimal multi-page TIFF I/O for grayscale stacks: little-endian, one
// sample per pixel, uncompressed, one strip per page, 16-bit unsigned
// (camera stacks) or 32-bit IEEE float (structures/PSFs). Page index is z.

#include <string>

#include "cocoa/types.hpp"

namespace cocoa {

enum class TiffPixel { u16, f32 };

struct TiffInfo {
    int pages = 0, ny = 0, nx = 0;
    TiffPixel pixel = TiffPixel::f32;
};

// u16 writes round to nearest and clamp to [0, 65535]; f32 writes narrow
// to single precision. Throws IoError / DomainError.
void write_tiff(const std::string& path, const Volume& v, TiffPixel pixel);

Volume read_tiff(const std::string& path, TiffInfo* info = nullptr);

}  // namespace cocoa
