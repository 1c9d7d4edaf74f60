#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "retseg/core/digest.hpp"
#include "retseg/core/run_config.hpp"
#include "retseg/data/registry.hpp"
#include "retseg/data/synth.hpp"
#include "retseg/engine/predict.hpp"
#include "retseg/engine/train.hpp"
#include "retseg/models/checkpoint.hpp"
#include "retseg/report/compare.hpp"
#include "retseg/report/overlay.hpp"
#include "retseg/report/tables.hpp"
#include "retseg/transfer/fp.hpp"
#include "retseg/transfer/grid.hpp"

namespace {

using namespace retseg;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitThreshold = 3;

// Raised when a result is well-formed but misses a user-given gate.
struct ThresholdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

std::string resolve_data_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("RETSEG_DATA_ROOT")) {
        if (*env) return env;
    }
    return ".";
}

std::vector<ScanRecord> records_for(const data::DatasetManifest& manifest,
                                    const std::string& split) {
    if (split == "all") return manifest.records();
    const auto parsed = parse_split(split);
    if (!parsed) throw ValidationError("split must be train, test or all");
    return manifest.split_records(*parsed);
}

std::unique_ptr<models::SegmentationModel> load_model(const std::string& path) {
    return models::restore_model(models::load_checkpoint(path));
}

Architecture parse_arch_or_throw(const std::string& name) {
    const auto arch = parse_architecture(name);
    if (!arch) {
        throw ValidationError("architecture: '" + name + "' is not valid; valid values are " +
                              architecture_names());
    }
    return *arch;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) {
        if (!field.empty()) out.push_back(field);
    }
    return out;
}

struct TrainArgs {
    std::string config;
    std::string out;
    std::string data_root;
    std::string manifest;
    bool waive_audit = false;
    std::optional<std::string> arch;
    std::optional<int> epochs;
    std::optional<int> batch_size;
    std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
    RunConfig cfg = RunConfig::from_file(args.config);
    if (args.arch) cfg.architecture = parse_arch_or_throw(*args.arch);
    if (args.epochs) cfg.epochs = *args.epochs;
    if (args.batch_size) cfg.batch_size = *args.batch_size;
    if (args.seed) cfg.seed = *args.seed;
    if (!args.manifest.empty()) cfg.train_manifest = args.manifest;
    cfg.validate();
    if (cfg.train_manifest.empty()) {
        throw ValidationError("no training manifest: set train_manifest in the config or pass "
                              "--manifest");
    }

    const std::string canonical = cfg.to_kv().serialize();
    const std::string ckpt_path = args.out + "/checkpoint.ckpt";
    const std::string cfg_path = args.out + "/config.kv";
    std::filesystem::create_directories(args.out);
    if (std::filesystem::exists(ckpt_path) && std::filesystem::exists(cfg_path)) {
        if (slurp(cfg_path) == canonical) {
            std::cout << "run already complete: " << ckpt_path << "\n";
            return 0;
        }
        throw ValidationError("output directory holds a different run configuration: " +
                              cfg_path);
    }

    const auto manifest = data::load_manifest(cfg.train_manifest);
    spit(cfg_path, canonical);
    std::ofstream loss_log(args.out + "/loss.log", std::ios::trunc);
    engine::TrainOptions topt;
    topt.waive_audit = args.waive_audit;
    topt.loss_log = &loss_log;

    const auto state = engine::train(cfg, manifest, resolve_data_root(args.data_root), topt);
    engine::save_train_state(state, ckpt_path);
    std::cout << "trained " << to_string(cfg.architecture) << " for " << state.epochs_done
              << " epochs (" << state.model->parameter_count() << " parameters)\n";
    if (!state.epoch_losses.empty()) {
        std::cout << "final epoch loss " << state.epoch_losses.back() << "\n";
    }
    std::cout << "checkpoint " << ckpt_path << " digest " << to_hex(fnv1a64(slurp(ckpt_path)))
              << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string checkpoint;
    std::string manifest;
    std::string out;
    std::string data_root;
    std::string split = "test";
    std::string model_name;
    std::optional<double> min_mean_dice;
};

int cmd_evaluate(const EvaluateArgs& args) {
    auto model = load_model(args.checkpoint);
    const auto manifest = data::load_manifest(args.manifest);
    const auto records = records_for(manifest, args.split);
    const auto report = engine::evaluate(*model, records, resolve_data_root(args.data_root));

    std::filesystem::create_directories(args.out);
    spit(args.out + "/report.txt", report.serialize());
    const std::string name =
        args.model_name.empty() ? to_string(model->spec().architecture) : args.model_name;
    report::write_tables(report::emit_tables({{name, report}}, default_class_map()), args.out);

    std::cout << "scored " << report.scan_count << " scans (" << report.pixel_count
              << " pixels)\n";
    const auto show = [](const char* label, const std::optional<double>& v) {
        std::cout << label << " ";
        if (v) {
            std::cout << *v;
        } else {
            std::cout << "undefined";
        }
        std::cout << "\n";
    };
    show("mean dice", report.mean_dice);
    show("mean iou", report.mean_iou);
    show("micro f1", report.micro.f1);
    std::cout << "tables written to " << args.out << "\n";

    if (args.min_mean_dice) {
        if (!report.mean_dice || *report.mean_dice < *args.min_mean_dice) {
            std::ostringstream msg;
            msg << "mean dice ";
            if (report.mean_dice) {
                msg << *report.mean_dice;
            } else {
                msg << "undefined";
            }
            msg << " is below the required " << *args.min_mean_dice;
            throw ThresholdError(msg.str());
        }
    }
    return 0;
}

struct TransferArgs {
    std::string config;
    std::string manifest;
    std::string out;
    std::string data_root;
    std::string groups = "R,D,Z,B";
    std::string archs = "ragnet,pspnet,segnet,unet,fcn8,fcn32";
    bool waive_audit = false;
    int jobs = 1;
    std::optional<std::uint64_t> seed;
};

int cmd_transfer(const TransferArgs& args) {
    transfer::GridConfig grid;
    grid.base = RunConfig::from_file(args.config);
    if (args.seed) grid.base.seed = *args.seed;
    grid.base.validate();
    for (const auto& token : split_list(args.groups)) {
        const auto id = data::parse_group_id(token);
        if (!id) throw ValidationError("unknown group '" + token + "'; valid ids are R, D, Z, B");
        grid.groups.push_back(*id);
    }
    for (const auto& token : split_list(args.archs)) {
        grid.architectures.push_back(parse_arch_or_throw(token));
    }
    grid.data_root = resolve_data_root(args.data_root);
    grid.out_dir = args.out;
    grid.waive_audit = args.waive_audit;
    grid.jobs = args.jobs;

    const auto manifest = data::load_manifest(args.manifest);
    const auto matrix = transfer::run_grid(grid, manifest);

    const auto tables = report::emit_tables({}, default_class_map(), &matrix);
    spit(args.out + "/transfer.tsv", tables.transfer);
    std::cout << tables.transfer << "\n";
    for (const auto a : matrix.groups) {
        for (const auto b : matrix.groups) {
            if (a == b) continue;
            const auto row = transfer::rank_row(matrix, a, b);
            std::cout << data::to_string(a) << "->" << data::to_string(b) << ":";
            for (const auto arch : row.order) std::cout << " " << to_string(arch);
            if (row.tied) std::cout << " (tie broken alphabetically)";
            std::cout << "\n";
        }
    }
    std::cout << "matrix " << args.out << "/matrix.txt\n";
    return 0;
}

struct FpArgs {
    std::string checkpoint;
    std::string manifest;
    std::string out;
    std::string data_root;
    std::string split = "all";
    std::optional<double> require_tn;
};

int cmd_fp(const FpArgs& args) {
    auto model = load_model(args.checkpoint);
    const auto manifest = data::load_manifest(args.manifest);
    const auto records = records_for(manifest, args.split);
    const auto fp = transfer::fp_experiment(*model, records, resolve_data_root(args.data_root));

    std::filesystem::create_directories(args.out);
    spit(args.out + "/fp.txt", fp.describe());
    spit(args.out + "/report.txt", fp.detail.serialize());
    std::cout << fp.describe();

    if (args.require_tn && fp.tn < *args.require_tn) {
        std::ostringstream msg;
        msg << "tn_rate " << fp.tn << " is below the required " << *args.require_tn;
        throw ThresholdError(msg.str());
    }
    return 0;
}

struct OverlayArgs {
    std::string image;
    std::string out;
    std::string checkpoint;
    std::string mask;
    double alpha = 0.6;
};

int cmd_overlay(const OverlayArgs& args) {
    if (args.checkpoint.empty() == args.mask.empty()) {
        throw ValidationError("give exactly one of --checkpoint (predicted overlay) or --mask "
                              "(ground-truth overlay)");
    }
    const ImageU8 image = load_image(args.image);
    MaskImage mask;
    if (!args.checkpoint.empty()) {
        auto model = load_model(args.checkpoint);
        mask = engine::predict_image(*model, image);
    } else {
        mask = load_mask(args.mask);
    }
    const ImageU8 blended = report::render_overlay(image, mask, default_class_map(), args.alpha);
    save_image(blended, args.out);
    std::cout << "overlay written to " << args.out << "\n";
    return 0;
}

struct ReportArgs {
    std::string pixel_scores;
    std::string dice;
    std::string iou;
    std::string grid;
    std::string out;
    std::vector<std::string> comparisons;
};

int cmd_report(const ReportArgs& args) {
    const ClassMap cmap = default_class_map();
    const auto reports =
        report::parse_model_tables(slurp(args.pixel_scores), slurp(args.dice), slurp(args.iou),
                                   cmap);
    std::optional<transfer::TransferMatrix> matrix;
    if (!args.grid.empty()) matrix = transfer::TransferMatrix::parse(slurp(args.grid));

    const auto tables = report::emit_tables(reports, cmap, matrix ? &*matrix : nullptr);
    report::write_tables(tables, args.out);
    std::cout << tables.pixel_scores << "\n" << tables.dice_by_class << "\n"
              << tables.iou_by_class;
    if (!tables.transfer.empty()) std::cout << "\n" << tables.transfer;

    const auto find_report = [&](const std::string& model) -> const metrics::MetricReport& {
        for (const auto& mr : reports) {
            if (mr.model == model) return mr.report;
        }
        throw ValidationError("no model '" + model + "' in the score sheets");
    };
    for (const auto& spec : args.comparisons) {
        const auto parts = split_list(spec);
        if (parts.size() != 3) {
            throw ValidationError("--compare wants MODEL_A,MODEL_B,METRIC, got '" + spec + "'");
        }
        const auto delta =
            report::compare(parts[0], find_report(parts[0]), parts[1], find_report(parts[1]),
                            parts[2]);
        std::cout << "\n" << delta.phrase << " (absolute " << delta.absolute << ")\n";
    }
    std::cout << "tables written to " << args.out << "\n";
    return 0;
}

struct SynthArgs {
    std::string out;
    long scans = 4;
    long height = 64;
    long width = 64;
    std::uint64_t seed = 1;
    std::string dataset = "synthetic";
    std::string split = "train";
    bool healthy = false;
};

int cmd_synth(const SynthArgs& args) {
    data::SynthOptions opt;
    opt.n_scans = args.scans;
    opt.height = args.height;
    opt.width = args.width;
    opt.seed = args.seed;
    opt.healthy = args.healthy;
    const auto dataset = parse_dataset_id(args.dataset);
    if (!dataset) throw ValidationError("unknown dataset id '" + args.dataset + "'");
    opt.dataset_id = *dataset;
    const auto split = parse_split(args.split);
    if (!split) throw ValidationError("split must be train or test");
    opt.split = *split;

    const auto manifest = data::synth_fixture(opt, args.out);
    data::save_manifest(manifest, args.out + "/manifest.txt");
    std::cout << "wrote " << manifest.size() << " scans under " << args.out << "\n"
              << "manifest " << args.out << "/manifest.txt\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark toolkit for multi-modal retinal lesion segmentation"};
    app.require_subcommand(1);

    std::string audit_manifest;
    auto* audit = app.add_subcommand("audit", "Check a manifest against the expected registry");
    audit->add_option("--manifest", audit_manifest, "Manifest file to audit")->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train one architecture from a config file");
    train->add_option("--config", train_args.config, "Run configuration (key = value lines)")
        ->required();
    train->add_option("--out", train_args.out, "Run directory for checkpoint, config copy, log")
        ->required();
    train->add_option("--data-root", train_args.data_root,
                      "Directory scan refs resolve against (default $RETSEG_DATA_ROOT or .)");
    train->add_option("--manifest", train_args.manifest,
                      "Training manifest, overrides train_manifest from the config");
    train->add_option("--arch", train_args.arch, "Architecture override");
    train->add_option("--epochs", train_args.epochs, "Epoch count override");
    train->add_option("--batch-size", train_args.batch_size, "Batch size override");
    train->add_option("--seed", train_args.seed, "Seed override");
    train->add_flag("--waive-audit", train_args.waive_audit,
                    "Train even when the manifest fails the registry audit (fixtures)");

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint over a manifest split");
    evaluate->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")->required();
    evaluate->add_option("--manifest", eval_args.manifest, "Manifest of scans to score")
        ->required();
    evaluate->add_option("--out", eval_args.out, "Directory for report and score sheets")
        ->required();
    evaluate->add_option("--data-root", eval_args.data_root,
                         "Directory scan refs resolve against");
    evaluate->add_option("--split", eval_args.split, "train, test or all (default test)");
    evaluate->add_option("--model-name", eval_args.model_name,
                         "Row label in the emitted sheets (default: architecture)");
    evaluate->add_option("--min-mean-dice", eval_args.min_mean_dice,
                         "Exit 3 when mean dice falls below this gate");

    TransferArgs transfer_args;
    auto* transfer_cmd =
        app.add_subcommand("transfer", "Train/test every ordered dataset-group pair");
    transfer_cmd->add_option("--config", transfer_args.config, "Base run configuration")
        ->required();
    transfer_cmd->add_option("--manifest", transfer_args.manifest, "Full corpus manifest")
        ->required();
    transfer_cmd->add_option("--out", transfer_args.out, "Grid directory (cells + matrix)")
        ->required();
    transfer_cmd->add_option("--data-root", transfer_args.data_root,
                             "Directory scan refs resolve against");
    transfer_cmd->add_option("--groups", transfer_args.groups,
                             "Comma list of group ids (default R,D,Z,B)");
    transfer_cmd->add_option("--archs", transfer_args.archs,
                             "Comma list of architectures (default all six)");
    transfer_cmd->add_option("--jobs", transfer_args.jobs, "Concurrent cell workers (default 1)");
    transfer_cmd->add_option("--seed", transfer_args.seed, "Base seed override");
    transfer_cmd->add_flag("--waive-audit", transfer_args.waive_audit,
                           "Skip the registry audit (fixtures)");

    FpArgs fp_args;
    auto* fp = app.add_subcommand("fp", "False-positive check on an all-healthy manifest");
    fp->add_option("--checkpoint", fp_args.checkpoint, "Model checkpoint")->required();
    fp->add_option("--manifest", fp_args.manifest, "Manifest of healthy scans")->required();
    fp->add_option("--out", fp_args.out, "Directory for the tn-rate report")->required();
    fp->add_option("--data-root", fp_args.data_root, "Directory scan refs resolve against");
    fp->add_option("--split", fp_args.split, "train, test or all (default all)");
    fp->add_option("--require-tn", fp_args.require_tn,
                   "Exit 3 when the tn rate falls below this gate");

    OverlayArgs overlay_args;
    auto* overlay = app.add_subcommand("overlay", "Render a lesion color overlay as PPM");
    overlay->add_option("--image", overlay_args.image, "Scan raster (PGM or PPM)")->required();
    overlay->add_option("--out", overlay_args.out, "Output raster path")->required();
    overlay->add_option("--checkpoint", overlay_args.checkpoint,
                        "Predict the mask with this checkpoint");
    overlay->add_option("--mask", overlay_args.mask, "Overlay this mask instead of predicting");
    overlay->add_option("--alpha", overlay_args.alpha, "Blend factor in [0,1] (default 0.6)");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand("report", "Re-render score sheets and comparisons");
    report_cmd->add_option("--pixel-scores", report_args.pixel_scores,
                           "model x tpr/ppv/f1 sheet")->required();
    report_cmd->add_option("--dice", report_args.dice, "model x per-class dice sheet")
        ->required();
    report_cmd->add_option("--iou", report_args.iou, "model x per-class iou sheet")->required();
    report_cmd->add_option("--grid", report_args.grid, "Transfer matrix file to include");
    report_cmd->add_option("--out", report_args.out, "Directory for the rendered sheets")
        ->required();
    report_cmd->add_option("--compare", report_args.comparisons,
                           "MODEL_A,MODEL_B,METRIC delta summary (repeatable)");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic desk-scale fixture");
    synth->add_option("--out", synth_args.out, "Fixture directory")->required();
    synth->add_option("--scans", synth_args.scans, "Number of scans (default 4)");
    synth->add_option("--height", synth_args.height, "Scan height (default 64)");
    synth->add_option("--width", synth_args.width, "Scan width (default 64)");
    synth->add_option("--seed", synth_args.seed, "Generator seed (default 1)");
    synth->add_option("--dataset", synth_args.dataset, "Dataset id for the records");
    synth->add_option("--split", synth_args.split, "train or test (default train)");
    synth->add_flag("--healthy", synth_args.healthy, "Generate lesion-free scans");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (audit->parsed()) {
            const auto manifest = data::load_manifest(audit_manifest);
            if (manifest.empty()) {
                std::cout << "empty manifest\n";
                return kExitValidation;
            }
            const auto result = data::audit_splits(manifest);
            std::cout << result.describe();
            return result.passed ? 0 : kExitValidation;
        }
        if (train->parsed()) return cmd_train(train_args);
        if (evaluate->parsed()) return cmd_evaluate(eval_args);
        if (transfer_cmd->parsed()) return cmd_transfer(transfer_args);
        if (fp->parsed()) return cmd_fp(fp_args);
        if (overlay->parsed()) return cmd_overlay(overlay_args);
        if (report_cmd->parsed()) return cmd_report(report_args);
        if (synth->parsed()) return cmd_synth(synth_args);
    } catch (const ThresholdError& e) {
        std::cerr << "threshold: " << e.what() << "\n";
        return kExitThreshold;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
