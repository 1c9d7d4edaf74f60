#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "retseg/data/manifest.hpp"
#include "retseg/models/checkpoint.hpp"
#include "retseg/nn/adadelta.hpp"

namespace retseg::engine {

// A training run's complete mutable state. Saved as one checkpoint file
// (weights + optimizer accumulators + counters); the shuffle stream is
// derived from (seed, epoch), so nothing about the RNG needs persisting.
struct TrainState {
    std::unique_ptr<models::SegmentationModel> model;
    nn::AdadeltaOptimizer optimizer;
    std::uint64_t seed = 0;
    long epochs_done = 0;
    std::vector<double> epoch_losses;
};

struct TrainOptions {
    // The split audit is for the real seven-dataset corpus; synthetic
    // fixtures waive it explicitly.
    bool waive_audit = false;
    // Receives one "epoch<TAB>mean_loss" line per epoch.
    std::ostream* loss_log = nullptr;
};

// Mini-batch cross-entropy training over the manifest's train split,
// deterministic in config.seed. Throws on validation problems, an empty
// train split, a failed (unwaived) audit, and non-finite loss.
TrainState train(const RunConfig& config, const data::DatasetManifest& manifest,
                 const std::string& data_root, const TrainOptions& options = {});

void save_train_state(const TrainState& state, const std::string& path);
TrainState load_train_state(const std::string& path);

}  // namespace retseg::engine
