#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "retseg/core/class_map.hpp"
#include "retseg/core/mask.hpp"

namespace retseg::metrics {

struct ClassCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
};

// One-vs-rest pixel confusion counts per class, accumulated in 64-bit
// integers across an entire evaluation set.
class ConfusionAccumulator {
public:
    const ClassCounts& counts(int cls) const { return per_class_.at(static_cast<std::size_t>(cls)); }
    std::int64_t total_pixels() const { return total_pixels_; }

    void add(const MaskImage& gt, const MaskImage& pred);
    void merge(const ConfusionAccumulator& other);

private:
    std::array<ClassCounts, kNumClasses> per_class_{};
    std::int64_t total_pixels_ = 0;
};

ConfusionAccumulator accumulate(const MaskImage& gt, const MaskImage& pred);

// All single-value metrics return nullopt when their denominator is zero
// (class absent from both gt and prediction carries no evidence).
std::optional<double> dice(const ConfusionAccumulator& acc, int cls);
std::optional<double> iou(const ConfusionAccumulator& acc, int cls);

// Arithmetic mean over lesion classes 1..5, skipping undefined entries.
// Throws if every lesion class is undefined.
double mean_over_lesions(const std::vector<std::optional<double>>& per_class);

struct MicroPixelMetrics {
    std::optional<double> tpr;
    std::optional<double> ppv;
    std::optional<double> f1;
};

// Pools tp/fp/fn over lesion classes 1..5 before dividing.
MicroPixelMetrics micro_pixel_metrics(const ConfusionAccumulator& acc);

static constexpr double f1_from(double tpr, double ppv) {
    return 2.0 * tpr * ppv / (tpr + ppv);
}

// Background pixels kept background over all background pixels.
std::optional<double> tn_rate(const ConfusionAccumulator& acc);

// (a - b) / a, the convention behind every quoted percentage lead.
double relative_improvement(double a, double b);

}  // namespace retseg::metrics
