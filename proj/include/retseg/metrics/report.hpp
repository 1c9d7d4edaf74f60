#pragma once

#include <string>
#include <vector>

#include "retseg/metrics/confusion.hpp"

namespace retseg::metrics {

// Evaluation summary for one scan set. Counts are pooled across the whole
// set before dividing (recorded in `aggregation`), so per-image 0/0 cases
// never arise.
struct MetricReport {
    std::string aggregation = "pooled-pixel-counts";
    long scan_count = 0;
    std::int64_t pixel_count = 0;
    std::vector<std::optional<double>> dice_per_class;  // indexed by class, size 6
    std::vector<std::optional<double>> iou_per_class;
    std::optional<double> mean_dice;
    std::optional<double> mean_iou;
    MicroPixelMetrics micro;
    std::optional<double> tn;

    static MetricReport from_accumulator(const ConfusionAccumulator& acc, long scan_count);

    // Byte-stable text form; parse(serialize(r)) reproduces r exactly.
    std::string serialize() const;
    static MetricReport parse(const std::string& text);
};

// Full round-trip precision for doubles ("%.17g").
std::string format_double(double value);

}  // namespace retseg::metrics
