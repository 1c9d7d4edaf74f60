#include "archs.hpp"

namespace retseg::models {

namespace {

// Two stacked 3x3 conv-bn-relu units, the classic contracting/expanding
// building block.
struct DoubleConv {
    ConvBnRelu first;
    ConvBnRelu second;

    DoubleConv() = default;
    DoubleConv(ParamStore& store, const std::string& name, long in_c, long out_c, Rng& rng)
        : first(store, name + ".a", in_c, out_c, 3, 1, 1, rng),
          second(store, name + ".b", out_c, out_c, 3, 1, 1, rng) {}
    Var forward(const Var& x, bool training) const {
        return second.forward(first.forward(x, training), training);
    }
};

// Skip-concat decoder over the strided encoder. Stage widths mirror the
// encoder so detail carried by the skips is kept at full width.
class UnetModel final : public SegmentationModel {
public:
    UnetModel(const ModelSpec& spec, Rng& rng)
        : SegmentationModel(spec, BackboneVariant::strided, rng) {
        const auto& w = spec_.backbone.stage_widths;
        const long sw = spec_.backbone.stem_width;
        up16_ = DoubleConv(params_, "decoder.up16", w[3] + w[2], w[2], rng);
        up8_ = DoubleConv(params_, "decoder.up8", w[2] + w[1], w[1], rng);
        up4_ = DoubleConv(params_, "decoder.up4", w[1] + w[0], w[0], rng);
        up2_ = ConvBnRelu(params_, "decoder.up2", w[0], sw, 3, 1, 1, rng);
        up1_ = ConvBnRelu(params_, "decoder.up1", sw, sw, 3, 1, 1, rng);
        score_ = Conv2dLayer(params_, "decoder.score", sw, spec_.num_classes, 1, 1, 0, true, rng);
    }

private:
    Var decode(const EncoderTaps& taps, bool training) const override {
        Var d = up16_.forward(nn::concat_channels(nn::upsample_linear(taps.s32, 2), taps.s16),
                              training);
        d = up8_.forward(nn::concat_channels(nn::upsample_linear(d, 2), taps.s8), training);
        d = up4_.forward(nn::concat_channels(nn::upsample_linear(d, 2), taps.s4), training);
        d = up2_.forward(nn::upsample_linear(d, 2), training);
        d = up1_.forward(nn::upsample_linear(d, 2), training);
        return score_.forward(d);
    }

    DoubleConv up16_;
    DoubleConv up8_;
    DoubleConv up4_;
    ConvBnRelu up2_;
    ConvBnRelu up1_;
    Conv2dLayer score_;
};

}  // namespace

std::unique_ptr<SegmentationModel> make_unet(const ModelSpec& spec, Rng& rng) {
    return std::make_unique<UnetModel>(spec, rng);
}

}  // namespace retseg::models
