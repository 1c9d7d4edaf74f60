#include "retseg/core/types.hpp"

#include <algorithm>

namespace retseg {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string to_string(DatasetId id) {
    switch (id) {
        case DatasetId::rabbani_i: return "rabbani-i";
        case DatasetId::rabbani_ii: return "rabbani-ii";
        case DatasetId::duke_i: return "duke-i";
        case DatasetId::duke_ii: return "duke-ii";
        case DatasetId::duke_iii: return "duke-iii";
        case DatasetId::biomisa: return "biomisa";
        case DatasetId::zhang: return "zhang";
        case DatasetId::synthetic: return "synthetic";
    }
    return "unknown";
}

std::string to_string(Modality m) {
    return m == Modality::fundus ? "fundus" : "oct";
}

std::string to_string(Split s) {
    return s == Split::train ? "train" : "test";
}

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::ragnet: return "ragnet";
        case Architecture::pspnet: return "pspnet";
        case Architecture::segnet: return "segnet";
        case Architecture::unet: return "unet";
        case Architecture::fcn8: return "fcn8";
        case Architecture::fcn32: return "fcn32";
    }
    return "unknown";
}

std::optional<DatasetId> parse_dataset_id(const std::string& s) {
    const std::string v = lower(s);
    if (v == "rabbani-i") return DatasetId::rabbani_i;
    if (v == "rabbani-ii") return DatasetId::rabbani_ii;
    if (v == "duke-i") return DatasetId::duke_i;
    if (v == "duke-ii") return DatasetId::duke_ii;
    if (v == "duke-iii") return DatasetId::duke_iii;
    if (v == "biomisa") return DatasetId::biomisa;
    if (v == "zhang") return DatasetId::zhang;
    if (v == "synthetic") return DatasetId::synthetic;
    return std::nullopt;
}

std::optional<Modality> parse_modality(const std::string& s) {
    const std::string v = lower(s);
    if (v == "fundus") return Modality::fundus;
    if (v == "oct") return Modality::oct;
    return std::nullopt;
}

std::optional<Split> parse_split(const std::string& s) {
    const std::string v = lower(s);
    if (v == "train") return Split::train;
    if (v == "test") return Split::test;
    return std::nullopt;
}

std::optional<Architecture> parse_architecture(const std::string& s) {
    const std::string v = lower(s);
    if (v == "ragnet") return Architecture::ragnet;
    if (v == "pspnet") return Architecture::pspnet;
    if (v == "segnet") return Architecture::segnet;
    if (v == "unet") return Architecture::unet;
    if (v == "fcn8" || v == "fcn-8") return Architecture::fcn8;
    if (v == "fcn32" || v == "fcn-32") return Architecture::fcn32;
    return std::nullopt;
}

std::string architecture_names() {
    return "ragnet, pspnet, segnet, unet, fcn8, fcn32";
}

}  // namespace retseg
