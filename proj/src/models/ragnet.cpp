#include <algorithm>

#include "archs.hpp"

namespace retseg::models {

namespace {

// Lateral-skip pyramid decoder: every tap is projected to the decoder
// width with a 1x1 conv and merged top-down with stepwise x2 upsampling
// and 3x3 smoothing convs. The stride-4 lateral can be dropped to study
// how much the finest skip contributes. The encoder object is exposed
// through the base class so a scan-level head could reuse it.
class RagnetModel final : public SegmentationModel {
public:
    RagnetModel(const ModelSpec& spec, Rng& rng)
        : SegmentationModel(spec, BackboneVariant::strided, rng) {
        const auto& w = spec_.backbone.stage_widths;
        const long dw = spec_.decoder_width;
        lateral32_ = Conv2dLayer(params_, "decoder.lateral32", w[3], dw, 1, 1, 0, true, rng);
        lateral16_ = Conv2dLayer(params_, "decoder.lateral16", w[2], dw, 1, 1, 0, true, rng);
        lateral8_ = Conv2dLayer(params_, "decoder.lateral8", w[1], dw, 1, 1, 0, true, rng);
        if (spec_.rag_stride4_lateral) {
            lateral4_ = Conv2dLayer(params_, "decoder.lateral4", w[0], dw, 1, 1, 0, true, rng);
        }
        smooth16_ = ConvBnRelu(params_, "decoder.smooth16", dw, dw, 3, 1, 1, rng);
        smooth8_ = ConvBnRelu(params_, "decoder.smooth8", dw, dw, 3, 1, 1, rng);
        smooth4_ = ConvBnRelu(params_, "decoder.smooth4", dw, dw, 3, 1, 1, rng);
        const long c2 = std::max<long>(8, dw / 2);
        const long c1 = std::max<long>(8, dw / 4);
        up2_ = ConvBnRelu(params_, "decoder.up2", dw, c2, 3, 1, 1, rng);
        up1_ = ConvBnRelu(params_, "decoder.up1", c2, c1, 3, 1, 1, rng);
        score_ = Conv2dLayer(params_, "decoder.score", c1, spec_.num_classes, 1, 1, 0, true, rng);
    }

private:
    Var decode(const EncoderTaps& taps, bool training) const override {
        Var p = lateral32_.forward(taps.s32);
        p = smooth16_.forward(nn::add(nn::upsample_linear(p, 2), lateral16_.forward(taps.s16)),
                              training);
        p = smooth8_.forward(nn::add(nn::upsample_linear(p, 2), lateral8_.forward(taps.s8)),
                             training);
        p = nn::upsample_linear(p, 2);
        if (spec_.rag_stride4_lateral) {
            p = nn::add(p, lateral4_.forward(taps.s4));
        }
        p = smooth4_.forward(p, training);
        p = up2_.forward(nn::upsample_linear(p, 2), training);
        p = up1_.forward(nn::upsample_linear(p, 2), training);
        return score_.forward(p);
    }

    Conv2dLayer lateral32_;
    Conv2dLayer lateral16_;
    Conv2dLayer lateral8_;
    Conv2dLayer lateral4_;
    ConvBnRelu smooth16_;
    ConvBnRelu smooth8_;
    ConvBnRelu smooth4_;
    ConvBnRelu up2_;
    ConvBnRelu up1_;
    Conv2dLayer score_;
};

}  // namespace

std::unique_ptr<SegmentationModel> make_ragnet(const ModelSpec& spec, Rng& rng) {
    return std::make_unique<RagnetModel>(spec, rng);
}

}  // namespace retseg::models
