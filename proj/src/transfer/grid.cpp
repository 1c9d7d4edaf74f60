#include "retseg/transfer/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "retseg/core/digest.hpp"
#include "retseg/data/registry.hpp"
#include "retseg/engine/predict.hpp"
#include "retseg/engine/train.hpp"

namespace retseg::transfer {

namespace {

std::string format_iou(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Partial files must never survive a kill, or resumption would trust
// them; write-then-rename keeps every visible file complete.
void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

// Keeps trailing empty fields, unlike getline-based splitting.
std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::string TransferCell::id() const {
    return data::to_string(train_group) + "-" + data::to_string(test_group) + "-" +
           to_string(architecture);
}

const TransferCell* TransferMatrix::find(data::GroupId train, data::GroupId test,
                                         Architecture arch) const {
    for (const auto& cell : cells) {
        if (cell.train_group == train && cell.test_group == test && cell.architecture == arch) {
            return &cell;
        }
    }
    return nullptr;
}

bool TransferMatrix::complete() const {
    for (const auto a : groups) {
        for (const auto b : groups) {
            if (a == b) continue;
            for (const auto arch : architectures) {
                if (!find(a, b, arch)) return false;
            }
        }
    }
    return true;
}

std::string TransferMatrix::serialize() const {
    std::ostringstream out;
    out << "# transfer matrix\n";
    out << "groups = ";
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (i) out << ',';
        out << data::to_string(groups[i]);
    }
    out << "\narchitectures = ";
    for (std::size_t i = 0; i < architectures.size(); ++i) {
        if (i) out << ',';
        out << to_string(architectures[i]);
    }
    out << '\n';
    for (const auto& cell : cells) {
        out << "cell = " << data::to_string(cell.train_group) << '|'
            << data::to_string(cell.test_group) << '|' << to_string(cell.architecture) << '|'
            << format_iou(cell.mean_iou) << '|' << cell.report_ref << '\n';
    }
    return out.str();
}

TransferMatrix TransferMatrix::parse(const std::string& text) {
    TransferMatrix matrix;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto context = "transfer matrix line " + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(context + ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto strip = [](std::string& s) {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
            while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
        };
        strip(key);
        strip(value);
        if (key == "groups") {
            for (const auto& tok : split_fields(value, ',')) {
                const auto id = data::parse_group_id(tok);
                if (!id) throw ValidationError(context + ": unknown group '" + tok + "'");
                matrix.groups.push_back(*id);
            }
        } else if (key == "architectures") {
            for (const auto& tok : split_fields(value, ',')) {
                const auto arch = parse_architecture(tok);
                if (!arch) throw ValidationError(context + ": unknown architecture '" + tok + "'");
                matrix.architectures.push_back(*arch);
            }
        } else if (key == "cell") {
            const auto fields = split_fields(value, '|');
            if (fields.size() != 5) {
                throw ValidationError(context + ": expected 5 '|'-separated cell fields");
            }
            TransferCell cell;
            const auto train = data::parse_group_id(fields[0]);
            const auto test = data::parse_group_id(fields[1]);
            const auto arch = parse_architecture(fields[2]);
            if (!train || !test) throw ValidationError(context + ": unknown group id");
            if (!arch) throw ValidationError(context + ": unknown architecture");
            cell.train_group = *train;
            cell.test_group = *test;
            cell.architecture = *arch;
            cell.mean_iou = std::stod(fields[3]);
            cell.report_ref = fields[4];
            matrix.cells.push_back(std::move(cell));
        } else {
            throw ValidationError(context + ": unknown key '" + key + "'");
        }
    }
    return matrix;
}

std::uint64_t cell_seed(std::uint64_t base_seed, data::GroupId train, data::GroupId test,
                        Architecture arch) {
    const std::string key = "cell|" + std::to_string(base_seed) + "|" + data::to_string(train) +
                            "|" + data::to_string(test) + "|" + to_string(arch);
    return fnv1a64(key);
}

TransferMatrix run_grid(const GridConfig& config, const data::DatasetManifest& manifest) {
    if (config.groups.size() < 2) {
        throw ValidationError("transfer grid needs at least two groups");
    }
    if (config.architectures.empty()) {
        throw ValidationError("transfer grid needs at least one architecture");
    }
    if (config.out_dir.empty()) {
        throw ValidationError("transfer grid needs an output directory");
    }
    if (config.jobs < 1) {
        throw ValidationError("transfer grid needs at least one worker");
    }
    if (!config.waive_audit) {
        const auto audit = data::audit_splits(manifest);
        if (!audit.passed) {
            throw ValidationError("manifest failed the split audit; fix the corpus or waive for "
                                  "synthetic fixtures");
        }
    }

    // Per-group sub-manifests, checked up front so a missing group fails
    // before any training starts.
    std::map<data::GroupId, data::DatasetManifest> by_group;
    for (const auto g : config.groups) {
        data::DatasetManifest sub = data::group(manifest, g);
        if (sub.split_records(Split::train).empty()) {
            throw ValidationError("group " + data::to_string(g) +
                                  " has no train records in the manifest");
        }
        if (sub.split_records(Split::test).empty()) {
            throw ValidationError("group " + data::to_string(g) +
                                  " has no test records in the manifest");
        }
        by_group.emplace(g, std::move(sub));
    }

    // Recipe digest keys each cell directory so artifacts from a changed
    // configuration are never mistaken for finished work.
    const std::string recipe = config.base.to_kv().serialize();
    const std::string recipe_tag = to_hex(fnv1a64(recipe)).substr(4);

    TransferMatrix matrix;
    matrix.groups = config.groups;
    matrix.architectures = config.architectures;

    std::filesystem::create_directories(config.out_dir + "/cells");

    struct Pending {
        data::GroupId a;
        data::GroupId b;
        Architecture arch;
    };
    std::vector<Pending> pending;
    for (const auto a : config.groups) {
        for (const auto b : config.groups) {
            if (a == b) continue;
            for (const auto arch : config.architectures) pending.push_back({a, b, arch});
        }
    }

    const auto compute = [&](const Pending& p) {
        TransferCell cell;
        cell.train_group = p.a;
        cell.test_group = p.b;
        cell.architecture = p.arch;
        const std::string cell_dir_rel = "cells/" + cell.id() + "-" + recipe_tag;
        const std::string cell_dir = config.out_dir + "/" + cell_dir_rel;
        cell.report_ref = cell_dir_rel + "/report.txt";
        const std::string report_path = config.out_dir + "/" + cell.report_ref;
        try {
            if (std::filesystem::exists(report_path)) {
                cell.report = metrics::MetricReport::parse(read_file(report_path));
            } else {
                RunConfig run = config.base;
                run.architecture = p.arch;
                run.seed = cell_seed(config.base.seed, p.a, p.b, p.arch);
                engine::TrainOptions topt;
                topt.waive_audit = true;  // the full manifest was audited above
                engine::TrainState state =
                    engine::train(run, by_group.at(p.a), config.data_root, topt);
                cell.report = engine::evaluate(*state.model,
                                               by_group.at(p.b).split_records(Split::test),
                                               config.data_root);
                std::filesystem::create_directories(cell_dir);
                write_file_atomic(report_path, cell.report.serialize());
            }
            if (!cell.report.mean_iou.has_value()) {
                throw std::runtime_error("evaluation produced no defined lesion IoU");
            }
            cell.mean_iou = *cell.report.mean_iou;
        } catch (const std::exception& e) {
            throw std::runtime_error("cell " + cell.id() + ": " + e.what());
        }
        return cell;
    };

    // Cells are independent runs, so workers only share the fixed inputs;
    // results land by index, keeping the matrix order and bytes identical
    // regardless of worker count.
    matrix.cells.resize(pending.size());
    if (config.jobs == 1 || pending.size() <= 1) {
        for (std::size_t i = 0; i < pending.size(); ++i) matrix.cells[i] = compute(pending[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> failures(pending.size());
        const auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= pending.size()) return;
                try {
                    matrix.cells[i] = compute(pending[i]);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        };
        const std::size_t n_workers =
            std::min(static_cast<std::size_t>(config.jobs), pending.size());
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    write_file_atomic(config.out_dir + "/matrix.txt", matrix.serialize());
    return matrix;
}

RankedRow rank_row(const TransferMatrix& matrix, data::GroupId train, data::GroupId test) {
    std::vector<const TransferCell*> row;
    for (const auto arch : matrix.architectures) {
        const TransferCell* cell = matrix.find(train, test, arch);
        if (!cell) {
            throw ValidationError("row " + data::to_string(train) + "->" + data::to_string(test) +
                                  " is incomplete: missing " + to_string(arch));
        }
        row.push_back(cell);
    }
    std::sort(row.begin(), row.end(), [](const TransferCell* x, const TransferCell* y) {
        if (x->mean_iou != y->mean_iou) return x->mean_iou > y->mean_iou;
        return to_string(x->architecture) < to_string(y->architecture);
    });
    RankedRow ranked;
    for (std::size_t i = 0; i < row.size(); ++i) {
        ranked.order.push_back(row[i]->architecture);
        if (i && row[i]->mean_iou == row[i - 1]->mean_iou) ranked.tied = true;
    }
    return ranked;
}

}  // namespace retseg::transfer
