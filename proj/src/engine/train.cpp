#include "retseg/engine/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "retseg/core/rng.hpp"
#include "retseg/data/registry.hpp"
#include "retseg/engine/loader.hpp"
#include "retseg/nn/ops.hpp"

namespace retseg::engine {

namespace {

std::string format_loss(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

TrainState train(const RunConfig& config, const data::DatasetManifest& manifest,
                 const std::string& data_root, const TrainOptions& options) {
    config.validate();
    if (!options.waive_audit) {
        const auto audit = data::audit_splits(manifest);
        if (!audit.passed) {
            throw ValidationError(
                "manifest failed the split audit; fix the corpus or waive the audit for "
                "synthetic fixtures");
        }
    }
    const std::vector<ScanRecord> records = manifest.split_records(Split::train);
    if (records.empty()) {
        throw ValidationError("manifest has no training records");
    }

    TrainState state;
    state.seed = config.seed;
    state.model = models::build_model(models::ModelSpec::from_run_config(config), config.seed);
    auto& model = *state.model;

    const Rng root(config.seed);
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    for (long epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(records.size());
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle = root.fork(1000 + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(shuffle.next_int(0, static_cast<long>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        long steps = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
            std::vector<LoadedScan> batch;
            const std::size_t end = std::min(order.size(), begin + batch_size);
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(load_scan(records[order[i]], data_root, config.input_h,
                                          config.input_w));
            }
            const nn::Var inputs = nn::make_leaf(stack_inputs(batch), false);
            const nn::Tensor labels = stack_labels(batch);

            model.params().zero_grads();
            const nn::Var scores = model.forward(inputs, true);
            const nn::Var loss = nn::softmax_cross_entropy(scores, labels, config.class_weights);
            const double loss_value = loss->value[0];
            if (!std::isfinite(loss_value)) {
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + " step " +
                                         std::to_string(steps + 1));
            }
            nn::backward(loss);
            state.optimizer.step(model.params());
            loss_sum += loss_value;
            ++steps;
        }

        const double mean_loss = loss_sum / static_cast<double>(steps);
        state.epoch_losses.push_back(mean_loss);
        state.epochs_done = epoch + 1;
        if (options.loss_log) {
            (*options.loss_log) << (epoch + 1) << '\t' << format_loss(mean_loss) << '\n';
            options.loss_log->flush();
        }
    }
    return state;
}

void save_train_state(const TrainState& state, const std::string& path) {
    models::Checkpoint ckpt = models::snapshot_model(*state.model);
    const auto& eg = state.optimizer.grad_sq();
    const auto& ed = state.optimizer.delta_sq();
    for (std::size_t i = 0; i < eg.size(); ++i) {
        ckpt.extras.emplace_back("opt.grad_sq." + std::to_string(i), eg[i]);
    }
    for (std::size_t i = 0; i < ed.size(); ++i) {
        ckpt.extras.emplace_back("opt.delta_sq." + std::to_string(i), ed[i]);
    }
    ckpt.meta.set("seed", std::to_string(state.seed));
    ckpt.meta.set("epochs_done", std::to_string(state.epochs_done));
    std::string losses;
    for (std::size_t i = 0; i < state.epoch_losses.size(); ++i) {
        if (i) losses += ' ';
        losses += format_loss(state.epoch_losses[i]);
    }
    ckpt.meta.set("epoch_losses", losses);
    models::save_checkpoint(ckpt, path);
}

TrainState load_train_state(const std::string& path) {
    const models::Checkpoint ckpt = models::load_checkpoint(path);
    TrainState state;
    state.model = models::restore_model(ckpt);
    state.seed = std::stoull(ckpt.meta.require("seed"));
    state.epochs_done = std::stol(ckpt.meta.require("epochs_done"));
    const std::string losses = ckpt.meta.require("epoch_losses");
    std::size_t pos = 0;
    while (pos < losses.size()) {
        std::size_t next = losses.find(' ', pos);
        if (next == std::string::npos) next = losses.size();
        state.epoch_losses.push_back(std::stod(losses.substr(pos, next - pos)));
        pos = next + 1;
    }

    const std::size_t n_params = state.model->params().params().size();
    auto& eg = state.optimizer.grad_sq();
    auto& ed = state.optimizer.delta_sq();
    for (const auto& [name, tensor] : ckpt.extras) {
        if (name.rfind("opt.grad_sq.", 0) == 0) {
            eg.push_back(tensor);
        } else if (name.rfind("opt.delta_sq.", 0) == 0) {
            ed.push_back(tensor);
        }
    }
    if (!eg.empty() && (eg.size() != n_params || ed.size() != n_params)) {
        throw ValidationError("checkpoint optimizer state does not cover every parameter");
    }
    return state;
}

}  // namespace retseg::engine
