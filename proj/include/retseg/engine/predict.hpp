#pragma once

#include <string>
#include <vector>

#include "retseg/data/manifest.hpp"
#include "retseg/engine/loader.hpp"
#include "retseg/metrics/report.hpp"
#include "retseg/models/model.hpp"

namespace retseg::engine {

// Eval-mode forward, channel argmax, nearest-neighbor resize back to the
// raster's native dimensions.
MaskImage predict_image(models::SegmentationModel& model, const ImageU8& image);

MaskImage predict_scan(models::SegmentationModel& model, const ScanRecord& record,
                       const std::string& root);

// Pools per-pixel confusion over all records at native resolution.
// Healthy scans contribute all-background ground truth.
metrics::MetricReport evaluate(models::SegmentationModel& model,
                               const std::vector<ScanRecord>& records, const std::string& root);

}  // namespace retseg::engine
