#include "archs.hpp"

#include "retseg/nn/init.hpp"

namespace retseg::models {

namespace {

// Fully convolutional heads. The 32s variant scores the deepest tap and
// bilinearly upsamples in one jump. The 8s variant adds skip scores at
// strides 16 and 8; those shallow heads start at zero so a fresh 8s net
// computes exactly what the 32s net does until training moves them.
class FcnModel final : public SegmentationModel {
public:
    FcnModel(const ModelSpec& spec, Rng& rng)
        : SegmentationModel(spec, BackboneVariant::strided, rng) {
        const auto& w = spec_.backbone.stage_widths;
        const long c = spec_.num_classes;
        score32_ = Conv2dLayer(params_, "head.score32", w[3], c, 1, 1, 0, true, rng);
        if (spec_.architecture == Architecture::fcn8) {
            score16_ = Conv2dLayer(params_, "head.score16", w[2], c, 1, 1, 0, true, rng);
            score8_ = Conv2dLayer(params_, "head.score8", w[1], c, 1, 1, 0, true, rng);
            nn::fill(score16_.w->value, 0.0);
            nn::fill(score8_.w->value, 0.0);
        }
    }

private:
    Var decode(const EncoderTaps& taps, bool training) const override {
        (void)training;
        Var s = score32_.forward(taps.s32);
        if (spec_.architecture == Architecture::fcn32) {
            return nn::upsample_linear(s, 32);
        }
        s = nn::add(nn::upsample_linear(s, 2), score16_.forward(taps.s16));
        s = nn::add(nn::upsample_linear(s, 2), score8_.forward(taps.s8));
        return nn::upsample_linear(s, 8);
    }

    Conv2dLayer score32_;
    Conv2dLayer score16_;
    Conv2dLayer score8_;
};

}  // namespace

std::unique_ptr<SegmentationModel> make_fcn(const ModelSpec& spec, Rng& rng) {
    return std::make_unique<FcnModel>(spec, rng);
}

}  // namespace retseg::models
