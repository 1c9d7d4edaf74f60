#include "retseg/engine/predict.hpp"

#include "retseg/metrics/confusion.hpp"
#include "retseg/nn/ops.hpp"

namespace retseg::engine {

MaskImage predict_image(models::SegmentationModel& model, const ImageU8& image) {
    const auto& spec = model.spec();
    Tensor input = image_to_input(image, spec.input_h, spec.input_w);
    Tensor batched({1, 3, spec.input_h, spec.input_w});
    batched.data = std::move(input.data);
    const nn::Var scores = model.forward(nn::make_leaf(std::move(batched), false), false);
    const MaskImage at_input_size = nn::argmax_mask(scores->value, 0);
    return resize_mask_nearest(at_input_size, image.width, image.height);
}

MaskImage predict_scan(models::SegmentationModel& model, const ScanRecord& record,
                       const std::string& root) {
    return predict_image(model, load_image(resolve_ref(root, record.image_ref)));
}

metrics::MetricReport evaluate(models::SegmentationModel& model,
                               const std::vector<ScanRecord>& records, const std::string& root) {
    if (records.empty()) {
        throw ValidationError("evaluate: no records to score");
    }
    metrics::ConfusionAccumulator acc;
    for (const auto& record : records) {
        const ImageU8 image = load_image(resolve_ref(root, record.image_ref));
        const MaskImage pred = predict_image(model, image);
        MaskImage gt;
        if (record.healthy()) {
            gt = MaskImage(image.width, image.height, 0);
        } else {
            gt = load_mask(resolve_ref(root, *record.mask_ref));
            if (gt.width != image.width || gt.height != image.height) {
                throw ValidationError("scan '" + record.scan_id +
                                      "': mask dimensions disagree with the image");
            }
        }
        acc.add(gt, pred);
    }
    return metrics::MetricReport::from_accumulator(acc, static_cast<long>(records.size()));
}

}  // namespace retseg::engine
