#pragma once

#include <string>
#include <vector>

#include "retseg/data/manifest.hpp"
#include "retseg/data/registry.hpp"

namespace retseg::testing {

// Builds an in-memory manifest that matches expected_registry() exactly.
inline data::DatasetManifest conforming_manifest() {
    std::vector<ScanRecord> records;
    records.reserve(175000);
    for (const auto& [id, exp] : data::expected_registry()) {
        auto emit = [&](Modality modality, Split split, long count) {
            for (long i = 0; i < count; ++i) {
                ScanRecord r;
                r.scan_id = to_string(id) + "-" + to_string(modality) + "-" + to_string(split) +
                            "-" + std::to_string(i);
                r.dataset_id = id;
                r.modality = modality;
                r.image_ref = r.scan_id + ".pgm";
                r.mask_ref = r.scan_id + "_mask.pgm";
                r.split = split;
                r.pathology = "unspecified";
                records.push_back(std::move(r));
            }
        };
        emit(Modality::fundus, Split::train, exp.train_fundus);
        emit(Modality::fundus, Split::test, exp.test_fundus());
        emit(Modality::oct, Split::train, exp.train_oct);
        emit(Modality::oct, Split::test, exp.test_oct());
    }
    return data::DatasetManifest(std::move(records));
}

}  // namespace retseg::testing
