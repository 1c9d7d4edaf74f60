#include "retseg/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "retseg/core/types.hpp"

namespace retseg {

namespace {

// Skips whitespace and '#' comment lines between netpbm header tokens.
int read_pnm_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) {
        throw ValidationError("unreadable image header: " + path);
    }
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

}  // namespace

ImageU8 load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open image: " + path);
    }
    char magic[2] = {0, 0};
    in.read(magic, 2);
    int channels = 0;
    if (magic[0] == 'P' && magic[1] == '5') {
        channels = 1;
    } else if (magic[0] == 'P' && magic[1] == '6') {
        channels = 3;
    } else {
        throw ValidationError("unsupported image format (want binary PGM/PPM): " + path);
    }
    const int width = read_pnm_int(in, path);
    const int height = read_pnm_int(in, path);
    const int maxval = read_pnm_int(in, path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
        throw ValidationError("bad image dimensions in " + path);
    }
    ImageU8 img(width, height, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw ValidationError("truncated image data in " + path);
    }
    return img;
}

void save_image(const ImageU8& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3) {
        throw ValidationError("image must have 1 or 3 channels");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write image: " + path);
    }
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) {
        throw std::runtime_error("failed writing image: " + path);
    }
}

ImageU8 resize_bilinear(const ImageU8& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw ValidationError("resize target must be positive");
    }
    if (out_w == img.width && out_h == img.height) return img;
    ImageU8 out(out_w, out_h, img.channels);
    for (int y = 0; y < out_h; ++y) {
        const double sy = static_cast<double>(y) * img.height / out_h;
        const int y0 = std::min(static_cast<int>(sy), img.height - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double sx = static_cast<double>(x) * img.width / out_w;
            const int x0 = std::min(static_cast<int>(sx), img.width - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
                const double bot = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
                const double v = (1.0 - fy) * top + fy * bot;
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

ImageU8 resize_nearest(const ImageU8& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw ValidationError("resize target must be positive");
    }
    ImageU8 out(out_w, out_h, img.channels);
    for (int y = 0; y < out_h; ++y) {
        const int sy = std::min(static_cast<int>(static_cast<std::int64_t>(y) * img.height / out_h),
                                img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const int sx = std::min(static_cast<int>(static_cast<std::int64_t>(x) * img.width / out_w),
                                    img.width - 1);
            for (int c = 0; c < img.channels; ++c) {
                out.at(y, x, c) = img.at(sy, sx, c);
            }
        }
    }
    return out;
}

}  // namespace retseg
