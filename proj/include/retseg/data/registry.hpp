#pragma once

#include <map>
#include <string>

#include "retseg/data/manifest.hpp"

namespace retseg::data {

// Published per-dataset scan totals and train allocations. Test counts are
// the complements.
struct ExpectedCounts {
    long fundus = 0;
    long oct = 0;
    long train_fundus = 0;
    long train_oct = 0;

    long test_fundus() const { return fundus - train_fundus; }
    long test_oct() const { return oct - train_oct; }
};

std::map<DatasetId, ExpectedCounts> expected_registry();

// Per-field actual-minus-expected differences for one dataset.
struct CountDelta {
    long fundus = 0;
    long oct = 0;
    long train_fundus = 0;
    long train_oct = 0;
    long test_fundus = 0;
    long test_oct = 0;

    bool clean() const {
        return fundus == 0 && oct == 0 && train_fundus == 0 && train_oct == 0 &&
               test_fundus == 0 && test_oct == 0;
    }
};

struct AuditReport {
    std::map<DatasetId, CountDelta> per_dataset;
    SplitCounts actual_totals;
    SplitCounts expected_totals;
    bool passed = false;

    std::string describe() const;
};

AuditReport audit_splits(const DatasetManifest& manifest);

}  // namespace retseg::data
