#include "retseg/metrics/confusion.hpp"

#include <stdexcept>
#include <string>

namespace retseg::metrics {

void ConfusionAccumulator::add(const MaskImage& gt, const MaskImage& pred) {
    if (gt.width != pred.width || gt.height != pred.height) {
        throw std::runtime_error("confusion: mask dimensions differ (" + std::to_string(gt.width) +
                                 "x" + std::to_string(gt.height) + " vs " +
                                 std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                                 ")");
    }
    const std::int64_t n = static_cast<std::int64_t>(gt.width) * gt.height;
    std::array<std::int64_t, kNumClasses> gt_total{};
    std::array<std::int64_t, kNumClasses> pred_total{};
    std::array<std::int64_t, kNumClasses> agree{};
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint8_t g = gt.labels[static_cast<std::size_t>(i)];
        const std::uint8_t p = pred.labels[static_cast<std::size_t>(i)];
        if (g >= kNumClasses || p >= kNumClasses) {
            throw std::runtime_error("confusion: label out of range at pixel " + std::to_string(i));
        }
        gt_total[g] += 1;
        pred_total[p] += 1;
        if (g == p) agree[g] += 1;
    }
    for (int c = 0; c < kNumClasses; ++c) {
        auto& k = per_class_[static_cast<std::size_t>(c)];
        k.tp += agree[static_cast<std::size_t>(c)];
        k.fn += gt_total[static_cast<std::size_t>(c)] - agree[static_cast<std::size_t>(c)];
        k.fp += pred_total[static_cast<std::size_t>(c)] - agree[static_cast<std::size_t>(c)];
        k.tn += n - gt_total[static_cast<std::size_t>(c)] - pred_total[static_cast<std::size_t>(c)] +
                agree[static_cast<std::size_t>(c)];
    }
    total_pixels_ += n;
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
    for (int c = 0; c < kNumClasses; ++c) {
        auto& k = per_class_[static_cast<std::size_t>(c)];
        const auto& o = other.per_class_[static_cast<std::size_t>(c)];
        k.tp += o.tp;
        k.fp += o.fp;
        k.fn += o.fn;
        k.tn += o.tn;
    }
    total_pixels_ += other.total_pixels_;
}

ConfusionAccumulator accumulate(const MaskImage& gt, const MaskImage& pred) {
    ConfusionAccumulator acc;
    acc.add(gt, pred);
    return acc;
}

std::optional<double> dice(const ConfusionAccumulator& acc, int cls) {
    const auto& k = acc.counts(cls);
    const std::int64_t denom = 2 * k.tp + k.fp + k.fn;
    if (denom == 0) return std::nullopt;
    return 2.0 * static_cast<double>(k.tp) / static_cast<double>(denom);
}

std::optional<double> iou(const ConfusionAccumulator& acc, int cls) {
    const auto& k = acc.counts(cls);
    const std::int64_t denom = k.tp + k.fp + k.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(k.tp) / static_cast<double>(denom);
}

double mean_over_lesions(const std::vector<std::optional<double>>& per_class) {
    // Accepts either all classes indexed 0..5 (background skipped) or the
    // five lesion values alone.
    std::size_t first;
    if (per_class.size() == kNumClasses) {
        first = 1;
    } else if (per_class.size() == kNumLesionClasses) {
        first = 0;
    } else {
        throw std::runtime_error("mean_over_lesions: expected 5 or 6 values, got " +
                                 std::to_string(per_class.size()));
    }
    double sum = 0.0;
    long defined = 0;
    for (std::size_t i = first; i < per_class.size(); ++i) {
        if (per_class[i]) {
            sum += *per_class[i];
            defined += 1;
        }
    }
    if (defined == 0) {
        throw std::runtime_error("mean_over_lesions: every lesion class is undefined");
    }
    return sum / static_cast<double>(defined);
}

MicroPixelMetrics micro_pixel_metrics(const ConfusionAccumulator& acc) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        const auto& k = acc.counts(c);
        tp += k.tp;
        fp += k.fp;
        fn += k.fn;
    }
    MicroPixelMetrics m;
    if (tp + fn > 0) m.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (tp + fp > 0) m.ppv = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (m.tpr && m.ppv && (*m.tpr + *m.ppv) > 0.0) m.f1 = f1_from(*m.tpr, *m.ppv);
    return m;
}

std::optional<double> tn_rate(const ConfusionAccumulator& acc) {
    const auto& bg = acc.counts(0);
    const std::int64_t denom = bg.tp + bg.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(bg.tp) / static_cast<double>(denom);
}

double relative_improvement(double a, double b) {
    if (a <= 0.0) {
        throw std::runtime_error("relative_improvement: reference value must be positive");
    }
    return (a - b) / a;
}

}  // namespace retseg::metrics
