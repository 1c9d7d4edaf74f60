#include "retseg/engine/loader.hpp"

#include <stdexcept>

namespace retseg::engine {

std::string resolve_ref(const std::string& root, const std::string& ref) {
    if (root.empty()) return ref;
    if (root.back() == '/') return root + ref;
    return root + "/" + ref;
}

Tensor image_to_input(const ImageU8& image, int input_h, int input_w) {
    const ImageU8 resized = resize_bilinear(image, input_w, input_h);
    Tensor out({3, input_h, input_w});
    for (int y = 0; y < input_h; ++y) {
        for (int x = 0; x < input_w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src_c = resized.channels == 3 ? c : 0;
                const double v = resized.at(y, x, src_c) / 255.0;
                out[(static_cast<long>(c) * input_h + y) * input_w + x] = 2.0 * v - 1.0;
            }
        }
    }
    return out;
}

LoadedScan load_scan(const ScanRecord& record, const std::string& root, int input_h,
                     int input_w) {
    LoadedScan scan;
    scan.record = record;
    const ImageU8 image = load_image(resolve_ref(root, record.image_ref));
    scan.original_w = image.width;
    scan.original_h = image.height;
    scan.input = image_to_input(image, input_h, input_w);
    if (record.healthy()) {
        scan.labels = MaskImage(input_w, input_h, 0);
    } else {
        const MaskImage native = load_mask(resolve_ref(root, *record.mask_ref));
        if (native.width != image.width || native.height != image.height) {
            throw ValidationError("scan '" + record.scan_id + "': mask is " +
                                  std::to_string(native.width) + "x" +
                                  std::to_string(native.height) + " but image is " +
                                  std::to_string(image.width) + "x" +
                                  std::to_string(image.height));
        }
        scan.labels = resize_mask_nearest(native, input_w, input_h);
    }
    return scan;
}

Tensor stack_inputs(const std::vector<LoadedScan>& batch) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    const long h = batch[0].input.dim(1);
    const long w = batch[0].input.dim(2);
    Tensor out({static_cast<long>(batch.size()), 3, h, w});
    long offset = 0;
    for (const auto& scan : batch) {
        if (scan.input.shape != batch[0].input.shape) {
            throw std::runtime_error("mixed input shapes in one batch");
        }
        for (double v : scan.input.data) out[offset++] = v;
    }
    return out;
}

Tensor stack_labels(const std::vector<LoadedScan>& batch) {
    if (batch.empty()) throw std::runtime_error("empty batch");
    const long h = batch[0].labels.height;
    const long w = batch[0].labels.width;
    Tensor out({static_cast<long>(batch.size()), h, w});
    long offset = 0;
    for (const auto& scan : batch) {
        for (std::uint8_t v : scan.labels.labels) out[offset++] = static_cast<double>(v);
    }
    return out;
}

}  // namespace retseg::engine
