#include "retseg/models/model.hpp"

#include <sstream>

namespace retseg::models {

namespace {

std::string join_int4(const std::array<int, 4>& values) {
    std::ostringstream out;
    for (int i = 0; i < 4; ++i) {
        if (i) out << ',';
        out << values[static_cast<std::size_t>(i)];
    }
    return out.str();
}

std::array<int, 4> split_int4(const std::string& text, const std::string& key) {
    std::array<int, 4> out{0, 0, 0, 0};
    std::istringstream in(text);
    std::string tok;
    int i = 0;
    while (std::getline(in, tok, ',')) {
        if (i >= 4) throw ValidationError(key + ": expected four integers, got '" + text + "'");
        out[static_cast<std::size_t>(i)] = std::stoi(tok);
        ++i;
    }
    if (i != 4) throw ValidationError(key + ": expected four integers, got '" + text + "'");
    return out;
}

}  // namespace

ModelSpec ModelSpec::from_run_config(const RunConfig& config) {
    ModelSpec spec;
    spec.architecture = config.architecture;
    spec.backbone = config.backbone;
    spec.input_h = config.input_h;
    spec.input_w = config.input_w;
    spec.num_classes = config.num_classes;
    spec.decoder_width = config.resolved_decoder_width();
    spec.pyramid_bins = config.pyramid_bins;
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (input_h <= 0 || input_w <= 0 || input_h % 32 != 0 || input_w % 32 != 0) {
        throw ValidationError("model input " + std::to_string(input_h) + "x" +
                              std::to_string(input_w) + " must be positive and divisible by 32");
    }
    if (in_channels != 3) {
        throw ValidationError("models take 3-channel input (grayscale is replicated on load)");
    }
    if (num_classes != kNumClasses) {
        throw ValidationError("num_classes must be " + std::to_string(kNumClasses));
    }
    if (decoder_width < 8) {
        throw ValidationError("decoder_width must be at least 8");
    }
    for (int b : pyramid_bins) {
        if (b < 1) throw ValidationError("pyramid bins must be positive");
    }
}

KvConfig ModelSpec::to_kv() const {
    KvConfig kv;
    kv.set("architecture", to_string(architecture));
    kv.set("backbone", backbone.identifier);
    kv.set("backbone_stem", std::to_string(backbone.stem_width));
    kv.set("backbone_widths", join_int4(backbone.stage_widths));
    kv.set("backbone_blocks", join_int4(backbone.stage_blocks));
    kv.set("input_size", std::to_string(input_h) + "x" + std::to_string(input_w));
    kv.set("in_channels", std::to_string(in_channels));
    kv.set("num_classes", std::to_string(num_classes));
    kv.set("decoder_width", std::to_string(decoder_width));
    kv.set("pyramid_bins", join_int4(pyramid_bins));
    kv.set("rag_stride4_lateral", rag_stride4_lateral ? "true" : "false");
    return kv;
}

ModelSpec ModelSpec::from_kv(const KvConfig& kv) {
    ModelSpec spec;
    const std::string arch = kv.require("architecture");
    auto parsed = parse_architecture(arch);
    if (!parsed) {
        throw ValidationError("unknown architecture '" + arch + "' (valid: " +
                              architecture_names() + ")");
    }
    spec.architecture = *parsed;
    spec.backbone.identifier = kv.require("backbone");
    spec.backbone.stem_width = std::stoi(kv.require("backbone_stem"));
    spec.backbone.stage_widths = split_int4(kv.require("backbone_widths"), "backbone_widths");
    spec.backbone.stage_blocks = split_int4(kv.require("backbone_blocks"), "backbone_blocks");
    const std::string size = kv.require("input_size");
    const auto x = size.find('x');
    if (x == std::string::npos) {
        throw ValidationError("input_size: expected HxW, got '" + size + "'");
    }
    spec.input_h = std::stoi(size.substr(0, x));
    spec.input_w = std::stoi(size.substr(x + 1));
    spec.in_channels = std::stoi(kv.require("in_channels"));
    spec.num_classes = std::stoi(kv.require("num_classes"));
    spec.decoder_width = std::stoi(kv.require("decoder_width"));
    spec.pyramid_bins = split_int4(kv.require("pyramid_bins"), "pyramid_bins");
    spec.rag_stride4_lateral = kv.require("rag_stride4_lateral") == "true";
    spec.validate();
    return spec;
}

SegmentationModel::SegmentationModel(ModelSpec spec, BackboneVariant variant, Rng& rng)
    : spec_(std::move(spec)) {
    spec_.validate();
    encoder_ = std::make_shared<ResidualEncoder>(params_, spec_.backbone, variant,
                                                 spec_.in_channels, rng);
}

Var SegmentationModel::forward(const Var& input, bool training) {
    const auto& shape = input->value.shape;
    if (shape.size() != 4 || shape[1] != spec_.in_channels || shape[2] != spec_.input_h ||
        shape[3] != spec_.input_w) {
        throw ValidationError("model expects [n," + std::to_string(spec_.in_channels) + "," +
                              std::to_string(spec_.input_h) + "," + std::to_string(spec_.input_w) +
                              "], got " + input->value.shape_string());
    }
    EncoderTaps taps = encoder_->forward(input, training);
    Var scores = decode(taps, training);
    const auto& out = scores->value.shape;
    if (out[0] != shape[0] || out[1] != spec_.num_classes || out[2] != spec_.input_h ||
        out[3] != spec_.input_w) {
        throw std::runtime_error("decoder produced " + scores->value.shape_string() +
                                 ", expected scores at input resolution");
    }
    return scores;
}

}  // namespace retseg::models
