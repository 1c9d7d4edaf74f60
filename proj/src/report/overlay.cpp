#include "retseg/report/overlay.hpp"

#include <cmath>

#include "retseg/core/types.hpp"

namespace retseg::report {

namespace {

std::uint8_t blend(std::uint8_t base, std::uint8_t color, double alpha) {
    const double v = (1.0 - alpha) * base + alpha * color;
    const long r = std::lround(v);
    return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

}  // namespace

ImageU8 render_overlay(const ImageU8& image, const MaskImage& mask, const ClassMap& cmap,
                       double alpha) {
    if (image.width != mask.width || image.height != mask.height) {
        throw ValidationError("overlay needs matching dimensions: image " +
                              std::to_string(image.width) + "x" + std::to_string(image.height) +
                              " vs mask " + std::to_string(mask.width) + "x" +
                              std::to_string(mask.height));
    }
    if (image.channels != 1 && image.channels != 3) {
        throw ValidationError("overlay base must be grayscale or RGB");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("overlay alpha must lie in [0,1]");
    }

    ImageU8 out(image.width, image.height, 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            std::uint8_t base[3];
            for (int c = 0; c < 3; ++c) {
                base[c] = image.at(y, x, image.channels == 1 ? 0 : c);
            }
            const int label = mask.at(y, x);
            if (!cmap.valid_index(label)) {
                throw ValidationError("mask label " + std::to_string(label) +
                                      " has no class map entry");
            }
            const auto& color = cmap.entry(label).color;
            if (!color.has_value()) {
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = base[c];
                continue;
            }
            out.at(y, x, 0) = blend(base[0], color->r, alpha);
            out.at(y, x, 1) = blend(base[1], color->g, alpha);
            out.at(y, x, 2) = blend(base[2], color->b, alpha);
        }
    }
    return out;
}

}  // namespace retseg::report
