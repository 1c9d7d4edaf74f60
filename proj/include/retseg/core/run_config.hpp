#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "retseg/core/kv_config.hpp"
#include "retseg/core/types.hpp"

namespace retseg {

// Residual encoder layout: four stages with taps at strides 4/8/16/32.
// stage_widths are the block output widths (bottleneck expansion already
// applied); the mid width of each bottleneck is width/4.
struct BackboneConfig {
    std::string identifier = "resnet50";
    int stem_width = 64;
    std::array<int, 4> stage_widths{256, 512, 1024, 2048};
    std::array<int, 4> stage_blocks{3, 4, 6, 3};

    static BackboneConfig from_identifier(const std::string& id);
    bool operator==(const BackboneConfig&) const = default;
};

enum class OptimizerKind { adadelta };
enum class LearningRateMode { default_mode };

// One training/evaluation run, loadable from a key=value config file.
// CLI flags override file values override defaults.
struct RunConfig {
    Architecture architecture = Architecture::unet;
    BackboneConfig backbone;
    int input_h = 512;
    int input_w = 512;
    int num_classes = 6;
    OptimizerKind optimizer = OptimizerKind::adadelta;
    LearningRateMode learning_rate_mode = LearningRateMode::default_mode;
    int epochs = 0;        // mandatory, no silent default
    int batch_size = 8;
    std::uint64_t seed = 0;
    std::string train_manifest;
    std::string test_manifest;

    // Decoder knobs. decoder_width 0 means "derive from the backbone"
    // (first stage width).
    int decoder_width = 0;
    std::array<int, 4> pyramid_bins{1, 2, 3, 6};
    bool augment = false;
    std::vector<double> class_weights;  // empty = unweighted loss

    int resolved_decoder_width() const {
        return decoder_width > 0 ? decoder_width : backbone.stage_widths[0];
    }

    // Throws ValidationError listing every problem at once.
    void validate() const;
    std::vector<std::string> validation_errors() const;

    static RunConfig from_kv(const KvConfig& kv);
    static RunConfig from_file(const std::string& path);
    KvConfig to_kv() const;
};

}  // namespace retseg
