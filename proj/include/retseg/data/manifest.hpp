#pragma once

#include <map>
#include <string>
#include <vector>

#include "retseg/core/types.hpp"

namespace retseg::data {

struct SplitCounts {
    long train = 0;
    long test = 0;
    long fundus = 0;
    long oct = 0;
    long train_fundus = 0;
    long train_oct = 0;
    long test_fundus = 0;
    long test_oct = 0;
    bool operator==(const SplitCounts&) const = default;
};

// Immutable after load; grouping returns new values.
class DatasetManifest {
public:
    DatasetManifest() = default;
    explicit DatasetManifest(std::vector<ScanRecord> records);

    const std::vector<ScanRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const std::map<DatasetId, SplitCounts>& dataset_counts() const { return counts_; }
    SplitCounts totals() const;

    std::vector<ScanRecord> split_records(Split split) const;

private:
    std::vector<ScanRecord> records_;
    std::map<DatasetId, SplitCounts> counts_;
};

// Manifest file format: a documented header line, then one record per
// line as scan_id|dataset_id|modality|image_ref|mask_ref|split|pathology
// (mask_ref may be empty = healthy scan). Parsing streams line by line.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// The header written by save_manifest and tolerated by load_manifest.
extern const char* const kManifestHeader;

}  // namespace retseg::data
