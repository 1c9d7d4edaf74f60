#include "retseg/core/mask.hpp"

#include <sstream>

#include "retseg/core/image.hpp"
#include "retseg/core/types.hpp"

namespace retseg {

std::string MaskViolation::describe() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::empty_dimensions:
            out << "empty-dimensions: mask has no pixels";
            break;
        case Kind::size_mismatch:
            out << "size-mismatch: label buffer does not match width*height";
            break;
        case Kind::invalid_label:
            out << "invalid-label: value " << label << " at (" << y << "," << x << ")";
            break;
    }
    return out.str();
}

std::vector<MaskViolation> validate_mask(const MaskImage& mask, const ClassMap& cmap) {
    std::vector<MaskViolation> violations;
    if (mask.width <= 0 || mask.height <= 0) {
        violations.push_back({MaskViolation::Kind::empty_dimensions});
        return violations;
    }
    if (mask.labels.size() != static_cast<std::size_t>(mask.width) * mask.height) {
        violations.push_back({MaskViolation::Kind::size_mismatch});
        return violations;
    }
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const int label = mask.at(y, x);
            if (!cmap.valid_index(label)) {
                violations.push_back({MaskViolation::Kind::invalid_label, y, x, label});
                return violations;  // first offender only
            }
        }
    }
    return violations;
}

MaskImage load_mask(const std::string& path) {
    const ImageU8 img = load_image(path);
    if (img.channels != 1) {
        throw ValidationError("mask must be a single-channel PGM: " + path);
    }
    MaskImage mask(img.width, img.height);
    mask.labels.assign(img.pixels.begin(), img.pixels.end());
    return mask;
}

void save_mask(const MaskImage& mask, const std::string& path) {
    ImageU8 img(mask.width, mask.height, 1);
    img.pixels.assign(mask.labels.begin(), mask.labels.end());
    save_image(img, path);
}

MaskImage resize_mask_nearest(const MaskImage& mask, int out_w, int out_h) {
    if (mask.width == out_w && mask.height == out_h) return mask;
    ImageU8 img(mask.width, mask.height, 1);
    img.pixels.assign(mask.labels.begin(), mask.labels.end());
    const ImageU8 resized = resize_nearest(img, out_w, out_h);
    MaskImage out(out_w, out_h);
    out.labels.assign(resized.pixels.begin(), resized.pixels.end());
    return out;
}

}  // namespace retseg
