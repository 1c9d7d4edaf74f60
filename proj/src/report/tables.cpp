#include "retseg/report/tables.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

namespace retseg::report {

namespace {

using Row = std::vector<std::optional<double>>;

std::string format_cell(const std::optional<double>& v, int decimals, bool best) {
    if (!v.has_value()) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
    return best ? std::string(buf) + "*" : std::string(buf);
}

// Marks every cell that attains the extreme, so exact ties are all
// visible instead of silently resolved.
std::vector<std::vector<bool>> best_per_column(const std::vector<Row>& rows) {
    std::vector<std::vector<bool>> best(rows.size());
    if (rows.empty()) return best;
    const std::size_t cols = rows[0].size();
    for (auto& b : best) b.assign(cols, false);
    for (std::size_t c = 0; c < cols; ++c) {
        std::optional<double> top;
        for (const auto& row : rows) {
            if (row[c] && (!top || *row[c] > *top)) top = row[c];
        }
        if (!top) continue;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r][c] && *rows[r][c] == *top) best[r][c] = true;
        }
    }
    return best;
}

std::vector<std::vector<bool>> best_per_row(const std::vector<Row>& rows) {
    std::vector<std::vector<bool>> best(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        best[r].assign(row.size(), false);
        std::optional<double> top;
        for (const auto& v : row) {
            if (v && (!top || *v > *top)) top = v;
        }
        if (!top) continue;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] && *row[c] == *top) best[r][c] = true;
        }
    }
    return best;
}

std::string render_sheet(const std::vector<std::string>& header,
                         const std::vector<std::string>& row_labels,
                         const std::vector<Row>& rows,
                         const std::vector<std::vector<bool>>& best, int decimals) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << '\t';
        out << header[i];
    }
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << row_labels[r];
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out << '\t' << format_cell(rows[r][c], decimals, best[r][c]);
        }
        out << '\n';
    }
    return out.str();
}

std::optional<double> class_value(const std::vector<std::optional<double>>& per_class,
                                  std::size_t index) {
    if (index >= per_class.size()) return std::nullopt;
    return per_class[index];
}

nlohmann::ordered_json json_value(const std::optional<double>& v) {
    if (!v.has_value()) return nullptr;
    return *v;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

struct ParsedSheet {
    std::vector<std::string> header;
    std::vector<std::string> labels;
    std::vector<Row> rows;
};

ParsedSheet parse_sheet(const std::string& text, const std::string& what) {
    ParsedSheet sheet;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (first) {
            sheet.header = std::move(fields);
            first = false;
            continue;
        }
        if (fields.size() != sheet.header.size()) {
            throw ValidationError(what + ": row '" + fields[0] + "' has " +
                                  std::to_string(fields.size()) + " fields, header has " +
                                  std::to_string(sheet.header.size()));
        }
        sheet.labels.push_back(fields[0]);
        Row row;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            std::string cell = fields[i];
            if (!cell.empty() && cell.back() == '*') cell.pop_back();
            if (cell == "n/a") {
                row.push_back(std::nullopt);
            } else {
                try {
                    row.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    throw ValidationError(what + ": cell '" + fields[i] + "' is not a number");
                }
            }
        }
        sheet.rows.push_back(std::move(row));
    }
    if (first) throw ValidationError(what + ": sheet has no header line");
    return sheet;
}

void expect_header(const ParsedSheet& sheet, const std::vector<std::string>& expected,
                   const std::string& what) {
    if (sheet.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : "\t") + h;
        throw ValidationError(what + ": unexpected header, want '" + want + "'");
    }
}

}  // namespace

std::string arch_label(Architecture arch) {
    switch (arch) {
        case Architecture::ragnet: return "RN";
        case Architecture::pspnet: return "PN";
        case Architecture::segnet: return "SN";
        case Architecture::unet: return "UN";
        case Architecture::fcn8: return "F-8";
        case Architecture::fcn32: return "F-32";
    }
    throw ValidationError("unknown architecture");
}

TableSet emit_tables(const std::vector<ModelReport>& reports, const ClassMap& cmap,
                     const transfer::TransferMatrix* grid) {
    TableSet tables;
    nlohmann::ordered_json machine;

    std::vector<std::string> class_names;
    for (int k = 1; k < cmap.size(); ++k) class_names.push_back(cmap.entry(k).name);

    std::vector<std::string> labels;
    for (const auto& mr : reports) labels.push_back(mr.model);

    {
        std::vector<Row> rows;
        auto& mirror = machine["pixel_scores"] = nlohmann::ordered_json::array();
        for (const auto& mr : reports) {
            const auto& m = mr.report.micro;
            rows.push_back({m.tpr, m.ppv, m.f1});
            mirror.push_back({{"model", mr.model},
                              {"tpr", json_value(m.tpr)},
                              {"ppv", json_value(m.ppv)},
                              {"f1", json_value(m.f1)}});
        }
        tables.pixel_scores = render_sheet({"model", "tpr", "ppv", "f1"}, labels, rows,
                                           best_per_column(rows), 4);
    }

    const auto class_sheet = [&](const char* key,
                                 const std::vector<std::optional<double>> metrics::MetricReport::*per_class,
                                 std::optional<double> metrics::MetricReport::*mean) {
        std::vector<Row> rows;
        auto& mirror = machine[key] = nlohmann::ordered_json::array();
        for (const auto& mr : reports) {
            Row row;
            nlohmann::ordered_json entry{{"model", mr.model}};
            for (std::size_t k = 1; k <= class_names.size(); ++k) {
                row.push_back(class_value(mr.report.*per_class, k));
                entry[class_names[k - 1]] = json_value(row.back());
            }
            row.push_back(mr.report.*mean);
            entry["mean"] = json_value(row.back());
            rows.push_back(std::move(row));
            mirror.push_back(std::move(entry));
        }
        std::vector<std::string> header{"model"};
        header.insert(header.end(), class_names.begin(), class_names.end());
        header.push_back("mean");
        return render_sheet(header, labels, rows, best_per_column(rows), 3);
    };
    tables.dice_by_class =
        class_sheet("dice_by_class", &metrics::MetricReport::dice_per_class,
                    &metrics::MetricReport::mean_dice);
    tables.iou_by_class = class_sheet("iou_by_class", &metrics::MetricReport::iou_per_class,
                                      &metrics::MetricReport::mean_iou);

    if (grid) {
        std::vector<std::string> header{"train->test"};
        for (const auto arch : grid->architectures) header.push_back(arch_label(arch));
        std::vector<std::string> pair_labels;
        std::vector<Row> rows;
        auto& mirror = machine["transfer"] = nlohmann::ordered_json::array();
        for (const auto a : grid->groups) {
            for (const auto b : grid->groups) {
                if (a == b) continue;
                pair_labels.push_back(data::to_string(a) + "->" + data::to_string(b));
                Row row;
                for (const auto arch : grid->architectures) {
                    const auto* cell = grid->find(a, b, arch);
                    row.push_back(cell ? std::optional<double>(cell->mean_iou) : std::nullopt);
                    mirror.push_back({{"train", data::to_string(a)},
                                      {"test", data::to_string(b)},
                                      {"architecture", to_string(arch)},
                                      {"mean_iou", json_value(row.back())}});
                }
                rows.push_back(std::move(row));
            }
        }
        tables.transfer = render_sheet(header, pair_labels, rows, best_per_row(rows), 3);
    }

    tables.machine = machine.dump(2) + "\n";
    return tables;
}

void write_tables(const TableSet& tables, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto write = [&](const std::string& name, const std::string& content) {
        if (content.empty()) return;
        std::ofstream out(out_dir + "/" + name, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + out_dir + "/" + name + "'");
        out << content;
    };
    write("pixel_scores.tsv", tables.pixel_scores);
    write("dice_by_class.tsv", tables.dice_by_class);
    write("iou_by_class.tsv", tables.iou_by_class);
    write("transfer.tsv", tables.transfer);
    write("tables.json", tables.machine);
}

std::vector<ModelReport> parse_model_tables(const std::string& pixel_scores_tsv,
                                            const std::string& dice_tsv,
                                            const std::string& iou_tsv, const ClassMap& cmap) {
    std::vector<std::string> class_names;
    for (int k = 1; k < cmap.size(); ++k) class_names.push_back(cmap.entry(k).name);
    std::vector<std::string> class_header{"model"};
    class_header.insert(class_header.end(), class_names.begin(), class_names.end());
    class_header.push_back("mean");

    const auto pixel = parse_sheet(pixel_scores_tsv, "pixel score sheet");
    expect_header(pixel, {"model", "tpr", "ppv", "f1"}, "pixel score sheet");
    const auto dice = parse_sheet(dice_tsv, "dice sheet");
    expect_header(dice, class_header, "dice sheet");
    const auto iou = parse_sheet(iou_tsv, "iou sheet");
    expect_header(iou, class_header, "iou sheet");

    if (dice.labels != pixel.labels || iou.labels != pixel.labels) {
        throw ValidationError("score sheets disagree on model names or order");
    }

    std::vector<ModelReport> reports;
    for (std::size_t r = 0; r < pixel.labels.size(); ++r) {
        ModelReport mr;
        mr.model = pixel.labels[r];
        mr.report.micro.tpr = pixel.rows[r][0];
        mr.report.micro.ppv = pixel.rows[r][1];
        mr.report.micro.f1 = pixel.rows[r][2];
        mr.report.dice_per_class.assign(class_names.size() + 1, std::nullopt);
        mr.report.iou_per_class.assign(class_names.size() + 1, std::nullopt);
        for (std::size_t k = 0; k < class_names.size(); ++k) {
            mr.report.dice_per_class[k + 1] = dice.rows[r][k];
            mr.report.iou_per_class[k + 1] = iou.rows[r][k];
        }
        mr.report.mean_dice = dice.rows[r][class_names.size()];
        mr.report.mean_iou = iou.rows[r][class_names.size()];
        reports.push_back(std::move(mr));
    }
    return reports;
}

}  // namespace retseg::report
