#pragma once

#include <string>
#include <vector>

#include "retseg/core/run_config.hpp"
#include "retseg/data/groups.hpp"
#include "retseg/metrics/report.hpp"

namespace retseg::transfer {

// One train-on-A / test-on-B measurement for one architecture.
struct TransferCell {
    data::GroupId train_group = data::GroupId::r;
    data::GroupId test_group = data::GroupId::d;
    Architecture architecture = Architecture::unet;
    double mean_iou = 0.0;
    std::string report_ref;  // cell report path relative to the grid dir
    metrics::MetricReport report;

    std::string id() const;  // e.g. "R-D-unet"
};

struct TransferMatrix {
    std::vector<data::GroupId> groups;
    std::vector<Architecture> architectures;
    std::vector<TransferCell> cells;

    const TransferCell* find(data::GroupId train, data::GroupId test, Architecture arch) const;
    bool complete() const;

    // Byte-stable text form (cell reports stay in their own files).
    std::string serialize() const;
    static TransferMatrix parse(const std::string& text);
};

struct GridConfig {
    RunConfig base;                        // training recipe shared by every cell
    std::vector<data::GroupId> groups;     // row/column order
    std::vector<Architecture> architectures;
    std::string data_root;
    std::string out_dir;                   // cell directories + matrix file
    bool waive_audit = false;
    int jobs = 1;                          // concurrent cell workers
};

// Trains and evaluates every ordered pair x architecture. Cells finished
// in an earlier run are loaded, not retrained; each cell runs under its
// own derived seed and writes into a directory keyed by its content, so
// resumption is safe against config drift.
TransferMatrix run_grid(const GridConfig& config, const data::DatasetManifest& manifest);

std::uint64_t cell_seed(std::uint64_t base_seed, data::GroupId train, data::GroupId test,
                        Architecture arch);

struct RankedRow {
    std::vector<Architecture> order;  // descending mean IoU
    bool tied = false;
};

// Throws if any of the matrix's architectures is missing for the pair.
// Ties break alphabetically and set the flag.
RankedRow rank_row(const TransferMatrix& matrix, data::GroupId train, data::GroupId test);

}  // namespace retseg::transfer
