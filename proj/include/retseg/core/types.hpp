#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace retseg {

// Thrown for bad user input: malformed configs, manifests, masks, flags.
// The CLI maps it to exit code 1; genuine runtime failures stay
// std::runtime_error and map to exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DatasetId {
    rabbani_i,
    rabbani_ii,
    duke_i,
    duke_ii,
    duke_iii,
    biomisa,
    zhang,
    synthetic,
};

enum class Modality { fundus, oct };

enum class Split { train, test };

enum class Architecture { ragnet, pspnet, segnet, unet, fcn8, fcn32 };

constexpr int kNumArchitectures = 6;

std::string to_string(DatasetId id);
std::string to_string(Modality m);
std::string to_string(Split s);
std::string to_string(Architecture a);

std::optional<DatasetId> parse_dataset_id(const std::string& s);
std::optional<Modality> parse_modality(const std::string& s);
std::optional<Split> parse_split(const std::string& s);
std::optional<Architecture> parse_architecture(const std::string& s);

// All six architecture names, comma separated; used in error messages.
std::string architecture_names();

// One scan (fundus photograph or OCT B-scan) as listed in a manifest.
// An absent mask_ref means the scan is healthy: an all-background ground
// truth is synthesized on load.
struct ScanRecord {
    std::string scan_id;
    DatasetId dataset_id = DatasetId::synthetic;
    Modality modality = Modality::oct;
    std::string image_ref;
    std::optional<std::string> mask_ref;
    Split split = Split::test;
    std::string pathology;

    bool healthy() const { return !mask_ref.has_value(); }
};

}  // namespace retseg
