#include "retseg/data/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace retseg::data {

const char* const kManifestHeader =
    "# scan_id|dataset_id|modality|image_ref|mask_ref|split|pathology";

DatasetManifest::DatasetManifest(std::vector<ScanRecord> records)
    : records_(std::move(records)) {
    std::unordered_set<std::string> seen;
    seen.reserve(records_.size());
    for (const auto& r : records_) {
        if (!seen.insert(r.scan_id).second) {
            throw ValidationError("duplicate scan_id '" + r.scan_id + "' in manifest");
        }
        auto& c = counts_[r.dataset_id];
        const bool is_train = r.split == Split::train;
        const bool is_fundus = r.modality == Modality::fundus;
        (is_train ? c.train : c.test) += 1;
        (is_fundus ? c.fundus : c.oct) += 1;
        if (is_train && is_fundus) c.train_fundus += 1;
        if (is_train && !is_fundus) c.train_oct += 1;
        if (!is_train && is_fundus) c.test_fundus += 1;
        if (!is_train && !is_fundus) c.test_oct += 1;
    }
}

SplitCounts DatasetManifest::totals() const {
    SplitCounts t;
    for (const auto& [id, c] : counts_) {
        t.train += c.train;
        t.test += c.test;
        t.fundus += c.fundus;
        t.oct += c.oct;
        t.train_fundus += c.train_fundus;
        t.train_oct += c.train_oct;
        t.test_fundus += c.test_fundus;
        t.test_oct += c.test_oct;
    }
    return t;
}

std::vector<ScanRecord> DatasetManifest::split_records(Split split) const {
    std::vector<ScanRecord> out;
    for (const auto& r : records_) {
        if (r.split == split) out.push_back(r);
    }
    return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '|') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open manifest: " + path);
    }
    std::vector<ScanRecord> records;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() != 7) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 7 '|' fields, got " +
                                  std::to_string(fields.size()));
        }
        ScanRecord r;
        r.scan_id = fields[0];
        if (r.scan_id.empty()) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": empty scan_id");
        }
        const auto dataset = parse_dataset_id(fields[1]);
        if (!dataset) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown dataset '" +
                                  fields[1] + "'");
        }
        r.dataset_id = *dataset;
        const auto modality = parse_modality(fields[2]);
        if (!modality) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown modality '" +
                                  fields[2] + "'");
        }
        r.modality = *modality;
        r.image_ref = fields[3];
        if (r.image_ref.empty()) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": empty image_ref");
        }
        if (!fields[4].empty()) r.mask_ref = fields[4];
        const auto split = parse_split(fields[5]);
        if (!split) {
            throw ValidationError(path + ":" + std::to_string(lineno) + ": unknown split '" +
                                  fields[5] + "'");
        }
        r.split = *split;
        r.pathology = fields[6];
        records.push_back(std::move(r));
    }
    return DatasetManifest(std::move(records));
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write manifest: " + path);
    }
    out << kManifestHeader << "\n";
    for (const auto& r : manifest.records()) {
        out << r.scan_id << "|" << to_string(r.dataset_id) << "|" << to_string(r.modality) << "|"
            << r.image_ref << "|" << (r.mask_ref ? *r.mask_ref : "") << "|" << to_string(r.split)
            << "|" << r.pathology << "\n";
    }
    if (!out) {
        throw std::runtime_error("failed writing manifest: " + path);
    }
}

}  // namespace retseg::data
