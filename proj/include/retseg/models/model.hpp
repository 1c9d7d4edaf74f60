#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "retseg/core/kv_config.hpp"
#include "retseg/core/run_config.hpp"
#include "retseg/models/backbone.hpp"

namespace retseg::models {

// Everything needed to rebuild a network with the same shapes. Training
// state (weights, optimizer accumulators) lives in checkpoints; the spec
// is the structural part and is embedded in every checkpoint header.
struct ModelSpec {
    Architecture architecture = Architecture::unet;
    BackboneConfig backbone;
    int input_h = 512;
    int input_w = 512;
    int in_channels = 3;
    int num_classes = kNumClasses;
    int decoder_width = 256;
    std::array<int, 4> pyramid_bins{1, 2, 3, 6};
    // When false, the stride-4 skip path of the attention-guided decoder
    // is dropped (its ablation configuration).
    bool rag_stride4_lateral = true;

    static ModelSpec from_run_config(const RunConfig& config);

    void validate() const;
    KvConfig to_kv() const;
    static ModelSpec from_kv(const KvConfig& kv);
    bool operator==(const ModelSpec&) const = default;
};

class SegmentationModel {
public:
    virtual ~SegmentationModel() = default;

    // input: [n, in_channels, input_h, input_w]; returns per-class scores
    // with the same spatial dims.
    Var forward(const Var& input, bool training);

    const ModelSpec& spec() const { return spec_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    long parameter_count() const { return params_.scalar_count(); }

    // The live encoder used by forward(); callers that fine-tune or probe
    // the backbone act on the same parameter objects.
    std::shared_ptr<ResidualEncoder> encoder_handle() const { return encoder_; }

protected:
    SegmentationModel(ModelSpec spec, BackboneVariant variant, Rng& rng);
    virtual Var decode(const EncoderTaps& taps, bool training) const = 0;

    ModelSpec spec_;
    nn::ParamStore params_;
    std::shared_ptr<ResidualEncoder> encoder_;
};

// Constructs the requested architecture with weights drawn from `seed`.
// Same spec and seed give byte-identical parameters.
std::unique_ptr<SegmentationModel> build_model(const ModelSpec& spec, std::uint64_t seed);

}  // namespace retseg::models
