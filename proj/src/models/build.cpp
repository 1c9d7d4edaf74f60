#include "archs.hpp"

namespace retseg::models {

std::unique_ptr<SegmentationModel> build_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    switch (spec.architecture) {
        case Architecture::ragnet:
            return make_ragnet(spec, rng);
        case Architecture::pspnet:
            return make_pspnet(spec, rng);
        case Architecture::segnet:
            return make_segnet(spec, rng);
        case Architecture::unet:
            return make_unet(spec, rng);
        case Architecture::fcn8:
        case Architecture::fcn32:
            return make_fcn(spec, rng);
    }
    throw std::runtime_error("unreachable architecture value");
}

}  // namespace retseg::models
