#include "archs.hpp"

namespace retseg::models {

namespace {

// Index-preserving mirror decoder over the pooled encoder. Each step
// first convolves down to the channel count the matching pool saw, then
// unpools with that pool's argmax indices, so boundaries re-appear at
// their recorded positions and everything else stays zero until the next
// conv fills it in.
class SegnetModel final : public SegmentationModel {
public:
    SegnetModel(const ModelSpec& spec, Rng& rng)
        : SegmentationModel(spec, BackboneVariant::pooled, rng) {
        const auto& w = spec_.backbone.stage_widths;
        const long sw = spec_.backbone.stem_width;
        dec5_ = ConvBnRelu(params_, "decoder.stage5", w[3], w[2], 3, 1, 1, rng);
        dec4_ = ConvBnRelu(params_, "decoder.stage4", w[2], w[1], 3, 1, 1, rng);
        dec3_ = ConvBnRelu(params_, "decoder.stage3", w[1], w[0], 3, 1, 1, rng);
        dec2_ = ConvBnRelu(params_, "decoder.stage2", w[0], sw, 3, 1, 1, rng);
        dec1_ = ConvBnRelu(params_, "decoder.stage1", sw, sw, 3, 1, 1, rng);
        fuse_ = ConvBnRelu(params_, "decoder.fuse", sw, sw, 3, 1, 1, rng);
        score_ = Conv2dLayer(params_, "decoder.score", sw, spec_.num_classes, 1, 1, 0, true, rng);
    }

private:
    static Var unpool(const Var& x, const nn::PoolResult& pool) {
        return nn::max_unpool2x2(x, pool.indices, pool.in_h, pool.in_w);
    }

    Var decode(const EncoderTaps& taps, bool training) const override {
        const auto& pools = taps.pools;  // outermost first: strides 2,4,8,16,32
        Var d = unpool(dec5_.forward(taps.s32, training), pools[4]);
        d = unpool(dec4_.forward(d, training), pools[3]);
        d = unpool(dec3_.forward(d, training), pools[2]);
        d = unpool(dec2_.forward(d, training), pools[1]);
        d = unpool(dec1_.forward(d, training), pools[0]);
        return score_.forward(fuse_.forward(d, training));
    }

    ConvBnRelu dec5_;
    ConvBnRelu dec4_;
    ConvBnRelu dec3_;
    ConvBnRelu dec2_;
    ConvBnRelu dec1_;
    ConvBnRelu fuse_;
    Conv2dLayer score_;
};

}  // namespace

std::unique_ptr<SegmentationModel> make_segnet(const ModelSpec& spec, Rng& rng) {
    return std::make_unique<SegnetModel>(spec, rng);
}

}  // namespace retseg::models
