#pragma once

#include <string>
#include <vector>

#include "retseg/core/image.hpp"
#include "retseg/core/mask.hpp"
#include "retseg/core/types.hpp"
#include "retseg/nn/tensor.hpp"

namespace retseg::engine {

using nn::Tensor;

// Manifest refs are relative paths under the data root.
std::string resolve_ref(const std::string& root, const std::string& ref);

// Network input from a raster: bilinear resize to (h, w), grayscale
// replicated to three channels, bytes mapped to [-1, 1].
Tensor image_to_input(const ImageU8& image, int input_h, int input_w);

struct LoadedScan {
    ScanRecord record;
    int original_w = 0;
    int original_h = 0;
    Tensor input;      // [3, input_h, input_w]
    MaskImage labels;  // nearest-resized to (input_h, input_w)
};

// Loads image and ground truth. Healthy scans (no mask ref) get an
// all-background label grid. A mask whose native dimensions disagree
// with the image's is a data error.
LoadedScan load_scan(const ScanRecord& record, const std::string& root, int input_h, int input_w);

Tensor stack_inputs(const std::vector<LoadedScan>& batch);  // [n, 3, h, w]
Tensor stack_labels(const std::vector<LoadedScan>& batch);  // [n, h, w]

}  // namespace retseg::engine
