#pragma once

#include <cstdint>
#include <string>

#include "retseg/data/manifest.hpp"

namespace retseg::data {

// Generator for desk-scale fixtures: grayscale scans with one rectangular
// pseudo-lesion per scan, lesion class rotating across scans, plus exact
// masks. Same options produce bit-identical files.
struct SynthOptions {
    long n_scans = 4;
    long height = 64;
    long width = 64;
    std::uint64_t seed = 1;
    DatasetId dataset_id = DatasetId::synthetic;
    Split split = Split::train;
    bool healthy = false;
};

// Writes scan and mask files under out_dir and returns the matching manifest.
// Image refs are stored as out_dir-relative joined paths.
DatasetManifest synth_fixture(const SynthOptions& options, const std::string& out_dir);

}  // namespace retseg::data
