#include "retseg/data/synth.hpp"

#include <filesystem>
#include <sstream>

#include "retseg/core/class_map.hpp"
#include "retseg/core/image.hpp"
#include "retseg/core/mask.hpp"
#include "retseg/core/rng.hpp"

namespace retseg::data {

namespace {

std::string scan_stem(const SynthOptions& o, long index) {
    std::ostringstream os;
    os << to_string(o.dataset_id) << "-" << to_string(o.split) << "-";
    os.width(4);
    os.fill('0');
    os << index;
    return os.str();
}

}  // namespace

DatasetManifest synth_fixture(const SynthOptions& options, const std::string& out_dir) {
    if (options.n_scans < 1) {
        throw ValidationError("synth_fixture: n_scans must be >= 1");
    }
    if (options.height < 8 || options.width < 8) {
        throw ValidationError("synth_fixture: size must be at least 8x8");
    }
    std::filesystem::create_directories(out_dir);

    const long h = options.height;
    const long w = options.width;
    Rng root(options.seed);
    std::vector<ScanRecord> records;

    for (long k = 0; k < options.n_scans; ++k) {
        Rng rng = root.fork(static_cast<std::uint64_t>(k));
        const long phase = rng.next_int(0, 31);
        const long jitter = rng.next_int(0, 7);

        // Lesion rectangle fills one quadrant so every architecture's coarsest
        // score grid can still align to its edges at pow2 input sizes.
        const int cls = options.healthy ? 0 : static_cast<int>(1 + k % kNumLesionClasses);
        const long quadrant = k % 4;
        const long x0 = (quadrant % 2) * (w / 2);
        const long y0 = (quadrant / 2) * (h / 2);
        const long x1 = x0 + w / 2;
        const long y1 = y0 + h / 2;

        ImageU8 image;
        image.width = w;
        image.height = h;
        image.channels = 1;
        image.pixels.resize(static_cast<std::size_t>(w * h));
        MaskImage mask;
        mask.width = w;
        mask.height = h;
        mask.labels.assign(static_cast<std::size_t>(w * h), 0);

        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                long value = 20 + (x * 3 + y * 5 + phase) % 40;
                if (cls != 0 && x >= x0 && x < x1 && y >= y0 && y < y1) {
                    value = 50 + 30 * cls + jitter;
                    mask.labels[static_cast<std::size_t>(y * w + x)] =
                        static_cast<std::uint8_t>(cls);
                }
                image.pixels[static_cast<std::size_t>(y * w + x)] =
                    static_cast<std::uint8_t>(value);
            }
        }

        const std::string stem = scan_stem(options, k);
        const std::string image_path = out_dir + "/" + stem + ".pgm";
        const std::string mask_path = out_dir + "/" + stem + "_mask.pgm";
        save_image(image, image_path);
        save_mask(mask, mask_path);

        ScanRecord r;
        r.scan_id = stem;
        r.dataset_id = options.dataset_id;
        r.modality = Modality::oct;
        // Refs are relative to the fixture directory, which acts as the
        // data root.
        r.image_ref = stem + ".pgm";
        r.mask_ref = stem + "_mask.pgm";
        r.split = options.split;
        r.pathology = options.healthy ? "healthy" : "synthetic-lesion";
        records.push_back(std::move(r));
    }
    return DatasetManifest(std::move(records));
}

}  // namespace retseg::data
