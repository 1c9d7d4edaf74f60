#pragma once

#include <string>
#include <vector>

#include "retseg/metrics/report.hpp"
#include "retseg/models/model.hpp"

namespace retseg::transfer {

// True-negative rates measured by full-scale runs of the bundled recipes,
// kept so small-scale results can be read against a fixed yardstick.
inline constexpr double kRecordedRagnetTn = 0.9999;
inline constexpr double kRecordedFcn32Tn = 0.9379;

struct FpReport {
    long scan_count = 0;
    std::int64_t pixel_count = 0;
    double tn = 0.0;  // fraction of pixels left unflagged on healthy scans
    metrics::MetricReport detail;

    std::string describe() const;
};

// Runs the model over scans that must all be lesion-free and reports how
// much healthy tissue it leaves unflagged. A record whose mask contains
// any lesion label voids the premise and raises a ValidationError.
FpReport fp_experiment(models::SegmentationModel& model, const std::vector<ScanRecord>& records,
                       const std::string& root);

}  // namespace retseg::transfer
