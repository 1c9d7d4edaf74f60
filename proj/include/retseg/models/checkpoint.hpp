#pragma once

#include <string>
#include <utility>
#include <vector>

#include "retseg/models/model.hpp"

namespace retseg::models {

// Self-describing archive: a text header (spec, tensor directory, free
// meta keys) followed by raw float64 payload. The engine stores
// optimizer accumulators and loop counters in extras/meta so a training
// run resumes bit-exactly.
struct Checkpoint {
    ModelSpec spec;
    std::vector<std::pair<std::string, Tensor>> params;
    std::vector<std::pair<std::string, Tensor>> buffers;
    std::vector<std::pair<std::string, Tensor>> extras;
    KvConfig meta;
};

// Copies the model's current parameters and buffers into a checkpoint.
Checkpoint snapshot_model(const SegmentationModel& model);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Throws on unreadable files, foreign formats, version or digest
// mismatches, and malformed directories.
Checkpoint load_checkpoint(const std::string& path);

// Overwrites the model's parameters and buffers from the checkpoint.
// The model's spec must equal the checkpoint's; names and shapes must
// match exactly.
void restore_into(SegmentationModel& model, const Checkpoint& ckpt);

// Builds the architecture the checkpoint describes and loads its
// weights.
std::unique_ptr<SegmentationModel> restore_model(const Checkpoint& ckpt);

}  // namespace retseg::models
