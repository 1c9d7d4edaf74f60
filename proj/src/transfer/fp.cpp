#include "retseg/transfer/fp.hpp"

#include <cstdio>
#include <sstream>

#include "retseg/core/mask.hpp"
#include "retseg/engine/loader.hpp"
#include "retseg/engine/predict.hpp"

namespace retseg::transfer {

std::string FpReport::describe() const {
    std::ostringstream out;
    char buf[64];
    out << "false-positive check over " << scan_count << " healthy scans (" << pixel_count
        << " pixels)\n";
    std::snprintf(buf, sizeof buf, "tn_rate = %.4f\n", tn);
    out << buf;
    std::snprintf(buf, sizeof buf, "recorded ragnet = %.4f\n", kRecordedRagnetTn);
    out << buf;
    std::snprintf(buf, sizeof buf, "recorded fcn32 = %.4f\n", kRecordedFcn32Tn);
    out << buf;
    return out.str();
}

FpReport fp_experiment(models::SegmentationModel& model, const std::vector<ScanRecord>& records,
                       const std::string& root) {
    if (records.empty()) {
        throw ValidationError("false-positive experiment needs at least one scan");
    }
    for (const auto& record : records) {
        if (record.healthy()) continue;
        const MaskImage mask = load_mask(engine::resolve_ref(root, *record.mask_ref));
        for (const auto label : mask.labels) {
            if (label != 0) {
                throw ValidationError("scan '" + record.scan_id +
                                      "' carries lesion labels; the false-positive experiment "
                                      "requires an all-healthy set");
            }
        }
    }

    FpReport fp;
    fp.detail = engine::evaluate(model, records, root);
    fp.scan_count = fp.detail.scan_count;
    fp.pixel_count = fp.detail.pixel_count;
    if (!fp.detail.tn.has_value()) {
        throw std::runtime_error("healthy set produced no background pixels");
    }
    fp.tn = *fp.detail.tn;
    return fp;
}

}  // namespace retseg::transfer
