#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace retseg {

// 8-bit raster, interleaved channels, row-major. channels is 1 (gray)
// or 3 (RGB).
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;  // height * width * channels

    ImageU8() = default;
    ImageU8(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Binary netpbm I/O: PGM (P5) for grayscale, PPM (P6) for RGB.
ImageU8 load_image(const std::string& path);
void save_image(const ImageU8& img, const std::string& path);

ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h);
ImageU8 resize_nearest(const ImageU8& img, int out_w, int out_h);

}  // namespace retseg
