#include <algorithm>

#include "archs.hpp"

namespace retseg::models {

namespace {

// Pyramid pooling over the stride-32 features: each bin branch averages
// to bin x bin cells, projects with a 1x1 conv to width/4 channels and
// is resized back to the feature grid, so concatenation doubles the
// channel count. A plain up2-conv chain then decodes to full resolution.
class PspnetModel final : public SegmentationModel {
public:
    PspnetModel(const ModelSpec& spec, Rng& rng)
        : SegmentationModel(spec, BackboneVariant::strided, rng) {
        const long w32 = spec_.backbone.stage_widths[3];
        const long branch_c = w32 / 4;
        // Plain biased convs here: after bin-1 pooling a branch carries a
        // single spatial value, and normalizing over it would zero the
        // branch's gradients at batch size 1.
        for (int i = 0; i < 4; ++i) {
            const std::string name = "decoder.pyramid.branch" + std::to_string(i + 1);
            branches_[static_cast<std::size_t>(i)] =
                Conv2dLayer(params_, name, w32, branch_c, 1, 1, 0, true, rng);
        }
        const long dw = spec_.decoder_width;
        fuse_ = ConvBnRelu(params_, "decoder.fuse", w32 + 4 * branch_c, dw, 3, 1, 1, rng);
        long in_c = dw;
        for (int i = 0; i < 5; ++i) {
            const long out_c = std::max<long>(8, dw >> (i + 1));
            ups_[static_cast<std::size_t>(i)] =
                ConvBnRelu(params_, "decoder.up" + std::to_string(16 >> i), in_c, out_c, 3, 1, 1,
                           rng);
            in_c = out_c;
        }
        score_ = Conv2dLayer(params_, "decoder.score", in_c, spec_.num_classes, 1, 1, 0, true,
                             rng);
    }

private:
    Var decode(const EncoderTaps& taps, bool training) const override {
        const long h32 = taps.s32->value.shape[2];
        const long w32 = taps.s32->value.shape[3];
        Var cat = taps.s32;
        for (int i = 0; i < 4; ++i) {
            const long bin = spec_.pyramid_bins[static_cast<std::size_t>(i)];
            Var g = nn::adaptive_avg_pool(taps.s32, bin, bin);
            g = nn::relu(branches_[static_cast<std::size_t>(i)].forward(g));
            g = nn::adaptive_avg_pool(g, h32, w32);
            cat = nn::concat_channels(cat, g);
        }
        Var d = fuse_.forward(cat, training);
        for (const auto& up : ups_) {
            d = up.forward(nn::upsample_linear(d, 2), training);
        }
        return score_.forward(d);
    }

    std::array<Conv2dLayer, 4> branches_;
    ConvBnRelu fuse_;
    std::array<ConvBnRelu, 5> ups_;
    Conv2dLayer score_;
};

}  // namespace

std::unique_ptr<SegmentationModel> make_pspnet(const ModelSpec& spec, Rng& rng) {
    return std::make_unique<PspnetModel>(spec, rng);
}

}  // namespace retseg::models
