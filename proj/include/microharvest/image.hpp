#pragma once

#include <string>

#include "microharvest/grid.hpp"

namespace mh {

// 8-bit grayscale image and float working image share the Grid container.
using ImageU8 = Grid<uint8_t>;
using ImageF = Grid<float>;

ImageF to_float(const ImageU8& img);               // scales to [0,1]
ImageU8 to_u8(const ImageF& img);                  // clamps [0,1] -> [0,255]

void save_pgm(const ImageU8& img, const std::string& path);
ImageU8 load_pgm(const std::string& path);         // P5 and P2

}  // namespace mh
