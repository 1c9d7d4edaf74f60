#pragma once

#include <string>
#include <vector>

#include "retseg/core/rng.hpp"
#include "retseg/core/run_config.hpp"
#include "retseg/models/blocks.hpp"
#include "retseg/nn/ops.hpp"

namespace retseg::models {

// How the encoder reaches stride 32. The strided variant downsamples
// inside the residual stages (3x3 stride-2 convs). The pooled variant
// keeps every conv at stride 1 and downsamples with recorded 2x2 max
// pools, so a mirror decoder can unpool with the exact argmax indices.
enum class BackboneVariant { strided, pooled };

std::string to_string(BackboneVariant v);

// Feature maps at strides 4, 8, 16 and 32 relative to the input, plus
// the recorded pools (pooled variant only, outermost first).
struct EncoderTaps {
    Var s4;
    Var s8;
    Var s16;
    Var s32;
    std::vector<nn::PoolResult> pools;
};

class ResidualEncoder {
public:
    ResidualEncoder(ParamStore& store, const BackboneConfig& config, BackboneVariant variant,
                    long in_channels, Rng& rng);

    EncoderTaps forward(const Var& x, bool training) const;

    const BackboneConfig& config() const { return config_; }
    BackboneVariant variant() const { return variant_; }

    // Output channel counts of the four taps.
    long tap_channels(int stage) const {
        return config_.stage_widths[static_cast<std::size_t>(stage)];
    }

private:
    BackboneConfig config_;
    BackboneVariant variant_;
    ConvBnRelu stem_;
    ConvBnRelu pooled_stem2_;  // pooled variant only, between the first two pools
    std::vector<std::vector<Bottleneck>> stages_;
};

}  // namespace retseg::models
