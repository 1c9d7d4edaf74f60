#include "retseg/models/backbone.hpp"

#include <stdexcept>

namespace retseg::models {

std::string to_string(BackboneVariant v) {
    return v == BackboneVariant::strided ? "strided" : "pooled";
}

ResidualEncoder::ResidualEncoder(ParamStore& store, const BackboneConfig& config,
                                 BackboneVariant variant, long in_channels, Rng& rng)
    : config_(config), variant_(variant) {
    const long stem_w = config.stem_width;
    if (variant == BackboneVariant::strided) {
        stem_ = ConvBnRelu(store, "encoder.stem", in_channels, stem_w, 7, 2, 3, rng);
    } else {
        stem_ = ConvBnRelu(store, "encoder.stem", in_channels, stem_w, 7, 1, 3, rng);
        pooled_stem2_ = ConvBnRelu(store, "encoder.stem2", stem_w, stem_w, 3, 1, 1, rng);
    }
    long in_c = stem_w;
    for (int s = 0; s < 4; ++s) {
        const long width = config.stage_widths[static_cast<std::size_t>(s)];
        const int blocks = config.stage_blocks[static_cast<std::size_t>(s)];
        if (width % 4 != 0) {
            throw ValidationError("stage width " + std::to_string(width) +
                                  " must be divisible by 4 (bottleneck mid width)");
        }
        if (blocks < 1) {
            throw ValidationError("every encoder stage needs at least one block");
        }
        std::vector<Bottleneck> stage;
        for (int b = 0; b < blocks; ++b) {
            const std::string name = "encoder.stage" + std::to_string(s + 1) + ".block" +
                                     std::to_string(b + 1);
            // In the strided variant, stages 2..4 downsample in their
            // first block; the pooled variant never strides.
            const long stride =
                (variant == BackboneVariant::strided && s > 0 && b == 0) ? 2 : 1;
            stage.emplace_back(store, name, in_c, width, stride, rng);
            in_c = width;
        }
        stages_.push_back(std::move(stage));
    }
}

EncoderTaps ResidualEncoder::forward(const Var& x, bool training) const {
    const auto& shape = x->value.shape;
    if (shape.size() != 4) {
        throw ValidationError("encoder input must be [n,c,h,w], got " + x->value.shape_string());
    }
    if (shape[2] % 32 != 0 || shape[3] % 32 != 0 || shape[2] < 32 || shape[3] < 32) {
        throw ValidationError("encoder input " + std::to_string(shape[2]) + "x" +
                              std::to_string(shape[3]) + " must be divisible by 32");
    }
    EncoderTaps taps;
    Var h;
    if (variant_ == BackboneVariant::strided) {
        h = stem_.forward(x, training);            // stride 2
        h = nn::maxpool2x2(h).out;                 // stride 4
        for (const auto& block : stages_[0]) h = block.forward(h, training);
        taps.s4 = h;
        for (const auto& block : stages_[1]) h = block.forward(h, training);
        taps.s8 = h;
        for (const auto& block : stages_[2]) h = block.forward(h, training);
        taps.s16 = h;
        for (const auto& block : stages_[3]) h = block.forward(h, training);
        taps.s32 = h;
    } else {
        h = stem_.forward(x, training);            // stride 1
        auto p1 = nn::maxpool2x2(h);               // stride 2
        h = pooled_stem2_.forward(p1.out, training);
        auto p2 = nn::maxpool2x2(h);               // stride 4
        h = p2.out;
        for (const auto& block : stages_[0]) h = block.forward(h, training);
        taps.s4 = h;
        auto p3 = nn::maxpool2x2(h);               // stride 8
        h = p3.out;
        for (const auto& block : stages_[1]) h = block.forward(h, training);
        taps.s8 = h;
        auto p4 = nn::maxpool2x2(h);               // stride 16
        h = p4.out;
        for (const auto& block : stages_[2]) h = block.forward(h, training);
        taps.s16 = h;
        auto p5 = nn::maxpool2x2(h);               // stride 32
        h = p5.out;
        for (const auto& block : stages_[3]) h = block.forward(h, training);
        taps.s32 = h;
        taps.pools = {p1, p2, p3, p4, p5};
    }
    return taps;
}

}  // namespace retseg::models
