#pragma once

#include <memory>

#include "retseg/models/model.hpp"

// Internal factory hooks, one per architecture family. Only build_model
// is public API.
namespace retseg::models {

std::unique_ptr<SegmentationModel> make_unet(const ModelSpec& spec, Rng& rng);
std::unique_ptr<SegmentationModel> make_segnet(const ModelSpec& spec, Rng& rng);
std::unique_ptr<SegmentationModel> make_pspnet(const ModelSpec& spec, Rng& rng);
std::unique_ptr<SegmentationModel> make_fcn(const ModelSpec& spec, Rng& rng);
std::unique_ptr<SegmentationModel> make_ragnet(const ModelSpec& spec, Rng& rng);

}  // namespace retseg::models
