#pragma once

#include "retseg/core/class_map.hpp"
#include "retseg/core/image.hpp"
#include "retseg/core/mask.hpp"

namespace retseg::report {

// Paints lesion pixels toward their class color; background pixels are
// copied byte-for-byte at any alpha. Grayscale bases are promoted to RGB.
// At alpha = 1 every lesion pixel is the pure class color, so the mask
// can be recovered from the raster alone.
ImageU8 render_overlay(const ImageU8& image, const MaskImage& mask, const ClassMap& cmap,
                       double alpha);

}  // namespace retseg::report
