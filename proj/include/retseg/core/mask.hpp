#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retseg/core/class_map.hpp"

namespace retseg {

// Per-pixel class labels, row-major. Dimensions match the paired image
// after preprocessing.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;  // height * width entries

    MaskImage() = default;
    MaskImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h),
          labels(static_cast<std::size_t>(w < 0 || h < 0 ? 0 : w * h), fill) {}

    std::uint8_t at(int y, int x) const {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    std::uint8_t& at(int y, int x) {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
    std::size_t pixel_count() const { return labels.size(); }

    bool operator==(const MaskImage&) const = default;
};

struct MaskViolation {
    enum class Kind { empty_dimensions, size_mismatch, invalid_label };
    Kind kind;
    // First offending pixel, when applicable.
    int y = -1;
    int x = -1;
    int label = -1;
    std::string describe() const;
};

// Empty result iff every label is a valid class index and dimensions are
// positive. Violations are data, not errors.
std::vector<MaskViolation> validate_mask(const MaskImage& mask, const ClassMap& cmap);

// Masks travel as binary PGM files whose gray values are the raw class
// indices.
MaskImage load_mask(const std::string& path);
void save_mask(const MaskImage& mask, const std::string& path);

// Nearest-neighbor resample; the only resize ever applied to label grids.
MaskImage resize_mask_nearest(const MaskImage& mask, int out_w, int out_h);

}  // namespace retseg
