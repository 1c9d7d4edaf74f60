#pragma once

#include <string>

#include "retseg/metrics/report.hpp"

namespace retseg::report {

struct DeltaSummary {
    std::string metric;
    double value_a = 0.0;
    double value_b = 0.0;
    double absolute = 0.0;      // value_a - value_b
    double relative_pct = 0.0;  // leader's relative improvement, signed like absolute
    std::string phrase;         // e.g. "ragnet leads unet by 9.49% on tpr"
};

// Metric keys: tpr, ppv, f1, mean_dice, mean_iou, tn. Throws if either
// report lacks the metric. Swapping a and b flips the sign of both
// deltas; the phrase always names the leader first.
DeltaSummary compare(const std::string& name_a, const metrics::MetricReport& a,
                     const std::string& name_b, const metrics::MetricReport& b,
                     const std::string& metric);

}  // namespace retseg::report
