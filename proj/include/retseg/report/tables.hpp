#pragma once

#include <string>
#include <vector>

#include "retseg/core/class_map.hpp"
#include "retseg/metrics/report.hpp"
#include "retseg/transfer/grid.hpp"

namespace retseg::report {

struct ModelReport {
    std::string model;
    metrics::MetricReport report;
};

// Rendered score sheets. The TSV forms round to presentation precision
// and mark bests with '*'; the machine mirror keeps full precision.
struct TableSet {
    std::string pixel_scores;   // model x tpr/ppv/f1, 4 decimals, best per column
    std::string dice_by_class;  // model x lesion classes + mean, 3 decimals
    std::string iou_by_class;   // same layout for IoU
    std::string transfer;       // train->test x architecture, best per row
    std::string machine;        // JSON mirror of everything above
};

TableSet emit_tables(const std::vector<ModelReport>& reports, const ClassMap& cmap,
                     const transfer::TransferMatrix* grid = nullptr);

// Writes pixel_scores.tsv, dice_by_class.tsv, iou_by_class.tsv,
// transfer.tsv (when present) and tables.json under out_dir.
void write_tables(const TableSet& tables, const std::string& out_dir);

// Inverse of the three model sheets; '*' markers are cosmetic and are
// ignored. The sheets must agree on model names and order.
std::vector<ModelReport> parse_model_tables(const std::string& pixel_scores_tsv,
                                            const std::string& dice_tsv,
                                            const std::string& iou_tsv, const ClassMap& cmap);

// Column label used for an architecture in the transfer sheet.
std::string arch_label(Architecture arch);

}  // namespace retseg::report
