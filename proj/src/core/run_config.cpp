#include "retseg/core/run_config.hpp"

#include <sstream>

#include "retseg/core/class_map.hpp"

namespace retseg {

namespace {

std::array<int, 4> parse_int4(const std::string& value, const std::string& key,
                              std::vector<std::string>& errors) {
    std::array<int, 4> out{0, 0, 0, 0};
    std::istringstream in(value);
    std::string tok;
    int i = 0;
    while (std::getline(in, tok, ',')) {
        if (i >= 4) break;
        try {
            out[static_cast<std::size_t>(i)] = std::stoi(tok);
        } catch (const std::exception&) {
            errors.push_back(key + ": '" + tok + "' is not an integer");
            return out;
        }
        ++i;
    }
    if (i != 4) {
        errors.push_back(key + ": expected four comma-separated integers, got '" + value + "'");
    }
    return out;
}

long parse_long(const std::string& value, const std::string& key,
                std::vector<std::string>& errors) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        errors.push_back(key + ": '" + value + "' is not an integer");
        return 0;
    }
}

}  // namespace

BackboneConfig BackboneConfig::from_identifier(const std::string& id) {
    BackboneConfig cfg;
    cfg.identifier = id;
    if (id == "resnet50") {
        cfg.stem_width = 64;
        cfg.stage_widths = {256, 512, 1024, 2048};
        cfg.stage_blocks = {3, 4, 6, 3};
    } else if (id == "resnet50-mini") {
        // Same contract (strides 4/8/16/32, bottleneck blocks), narrowed
        // for CPU-scale fixtures.
        cfg.stem_width = 16;
        cfg.stage_widths = {32, 64, 96, 128};
        cfg.stage_blocks = {1, 1, 1, 1};
    } else {
        throw ValidationError("unknown backbone identifier '" + id +
                              "' (valid: resnet50, resnet50-mini)");
    }
    return cfg;
}

std::vector<std::string> RunConfig::validation_errors() const {
    std::vector<std::string> errors;
    if (input_h <= 0 || input_w <= 0) {
        errors.push_back("input_size must be positive");
    }
    if (input_h % 32 != 0 || input_w % 32 != 0) {
        errors.push_back("input_size " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                         " must be divisible by 32 (backbone stride requirement)");
    }
    if (num_classes != kNumClasses) {
        errors.push_back("num_classes must be " + std::to_string(kNumClasses) +
                         " (class map cardinality), got " + std::to_string(num_classes));
    }
    if (epochs < 0) {
        errors.push_back("epochs must be non-negative");
    }
    if (batch_size <= 0) {
        errors.push_back("batch_size must be positive");
    }
    for (int w : backbone.stage_widths) {
        if (w <= 0 || w % 4 != 0) {
            errors.push_back("backbone stage widths must be positive multiples of 4");
            break;
        }
    }
    for (int b : backbone.stage_blocks) {
        if (b <= 0) {
            errors.push_back("backbone stage block counts must be positive");
            break;
        }
    }
    for (int b : pyramid_bins) {
        if (b <= 0) {
            errors.push_back("pyramid_bins must be positive");
            break;
        }
    }
    if (!class_weights.empty() && static_cast<int>(class_weights.size()) != num_classes) {
        errors.push_back("class_weights must list one weight per class");
    }
    return errors;
}

void RunConfig::validate() const {
    const auto errors = validation_errors();
    if (errors.empty()) return;
    std::ostringstream msg;
    msg << "invalid run configuration (" << errors.size() << " problem"
        << (errors.size() == 1 ? "" : "s") << "):";
    for (const auto& e : errors) msg << "\n  - " << e;
    throw ValidationError(msg.str());
}

RunConfig RunConfig::from_kv(const KvConfig& kv) {
    std::vector<std::string> errors;
    RunConfig cfg;

    if (auto arch = kv.get("architecture")) {
        if (auto parsed = parse_architecture(*arch)) {
            cfg.architecture = *parsed;
        } else {
            errors.push_back("architecture: '" + *arch + "' is not valid; valid values are " +
                             architecture_names());
        }
    } else {
        errors.push_back("architecture: required key missing; valid values are " +
                         architecture_names());
    }

    const std::string backbone_id = kv.get_or("backbone", "resnet50");
    try {
        cfg.backbone = BackboneConfig::from_identifier(backbone_id);
    } catch (const ValidationError& e) {
        errors.push_back(e.what());
    }
    if (auto widths = kv.get("backbone_widths")) {
        cfg.backbone.stage_widths = parse_int4(*widths, "backbone_widths", errors);
    }
    if (auto blocks = kv.get("backbone_blocks")) {
        cfg.backbone.stage_blocks = parse_int4(*blocks, "backbone_blocks", errors);
    }
    if (auto stem = kv.get("backbone_stem")) {
        cfg.backbone.stem_width = static_cast<int>(parse_long(*stem, "backbone_stem", errors));
    }

    if (auto size = kv.get("input_size")) {
        const auto x = size->find('x');
        if (x == std::string::npos) {
            errors.push_back("input_size: expected HxW, got '" + *size + "'");
        } else {
            cfg.input_h = static_cast<int>(parse_long(size->substr(0, x), "input_size", errors));
            cfg.input_w = static_cast<int>(parse_long(size->substr(x + 1), "input_size", errors));
        }
    }

    if (auto nc = kv.get("num_classes")) {
        cfg.num_classes = static_cast<int>(parse_long(*nc, "num_classes", errors));
    }

    const std::string opt = kv.get_or("optimizer", "adadelta");
    if (opt != "adadelta") {
        errors.push_back("optimizer: '" + opt + "' is not supported; only adadelta is");
    }
    const std::string lr_mode = kv.get_or("learning_rate_mode", "default");
    if (lr_mode != "default") {
        errors.push_back("learning_rate_mode: '" + lr_mode + "' is not supported; only default is");
    }

    if (auto epochs = kv.get("epochs")) {
        cfg.epochs = static_cast<int>(parse_long(*epochs, "epochs", errors));
    } else {
        errors.push_back("epochs: required key missing (no silent default)");
    }
    if (auto batch = kv.get("batch_size")) {
        cfg.batch_size = static_cast<int>(parse_long(*batch, "batch_size", errors));
    }
    if (auto seed = kv.get("seed")) {
        cfg.seed = static_cast<std::uint64_t>(parse_long(*seed, "seed", errors));
    }
    cfg.train_manifest = kv.get_or("train_manifest", "");
    cfg.test_manifest = kv.get_or("test_manifest", "");

    if (auto dw = kv.get("decoder_width")) {
        cfg.decoder_width = static_cast<int>(parse_long(*dw, "decoder_width", errors));
    }
    if (auto bins = kv.get("pyramid_bins")) {
        cfg.pyramid_bins = parse_int4(*bins, "pyramid_bins", errors);
    }
    if (auto aug = kv.get("augment")) {
        if (*aug == "on" || *aug == "true" || *aug == "1") {
            cfg.augment = true;
        } else if (*aug == "off" || *aug == "false" || *aug == "0") {
            cfg.augment = false;
        } else {
            errors.push_back("augment: expected on/off, got '" + *aug + "'");
        }
    }
    if (auto weights = kv.get("class_weights")) {
        std::istringstream in(*weights);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            try {
                cfg.class_weights.push_back(std::stod(tok));
            } catch (const std::exception&) {
                errors.push_back("class_weights: '" + tok + "' is not a number");
                break;
            }
        }
    }

    for (const auto& e : cfg.validation_errors()) errors.push_back(e);

    if (!errors.empty()) {
        std::ostringstream msg;
        msg << "invalid run configuration (" << errors.size() << " problem"
            << (errors.size() == 1 ? "" : "s") << "):";
        for (const auto& e : errors) msg << "\n  - " << e;
        throw ValidationError(msg.str());
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_kv(KvConfig::parse_file(path));
}

KvConfig RunConfig::to_kv() const {
    KvConfig kv;
    kv.set("architecture", to_string(architecture));
    kv.set("backbone", backbone.identifier);
    auto join4 = [](const std::array<int, 4>& a) {
        std::ostringstream out;
        out << a[0] << "," << a[1] << "," << a[2] << "," << a[3];
        return out.str();
    };
    kv.set("backbone_stem", std::to_string(backbone.stem_width));
    kv.set("backbone_widths", join4(backbone.stage_widths));
    kv.set("backbone_blocks", join4(backbone.stage_blocks));
    kv.set("input_size", std::to_string(input_h) + "x" + std::to_string(input_w));
    kv.set("num_classes", std::to_string(num_classes));
    kv.set("optimizer", "adadelta");
    kv.set("learning_rate_mode", "default");
    kv.set("epochs", std::to_string(epochs));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("seed", std::to_string(seed));
    kv.set("train_manifest", train_manifest);
    kv.set("test_manifest", test_manifest);
    kv.set("decoder_width", std::to_string(decoder_width));
    kv.set("pyramid_bins", join4(pyramid_bins));
    kv.set("augment", augment ? "on" : "off");
    if (!class_weights.empty()) {
        std::ostringstream out;
        for (std::size_t i = 0; i < class_weights.size(); ++i) {
            if (i) out << ",";
            out << class_weights[i];
        }
        kv.set("class_weights", out.str());
    }
    return kv;
}

}  // namespace retseg
