#include "retseg/models/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "retseg/core/digest.hpp"

namespace retseg::models {

namespace {

constexpr const char* kMagicLine = "RSEGCKPT 1";
constexpr const char* kDataLine = "data";
constexpr double kSentinel = 1.0;

std::string shape_to_string(const std::vector<long>& shape) {
    std::ostringstream out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    return out.str();
}

std::vector<long> shape_from_string(const std::string& text) {
    std::vector<long> shape;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, 'x')) shape.push_back(std::stol(tok));
    if (shape.empty()) throw ValidationError("checkpoint: empty tensor shape '" + text + "'");
    return shape;
}

void append_doubles(std::string& out, const std::vector<double>& values) {
    const std::size_t offset = out.size();
    out.resize(offset + values.size() * sizeof(double));
    std::memcpy(out.data() + offset, values.data(), values.size() * sizeof(double));
}

void describe_tensors(KvConfig& kv, const std::string& prefix,
                      const std::vector<std::pair<std::string, Tensor>>& tensors) {
    kv.set(prefix + "s", std::to_string(tensors.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        kv.set(base + ".name", tensors[i].first);
        kv.set(base + ".shape", shape_to_string(tensors[i].second.shape));
    }
}

std::vector<std::pair<std::string, Tensor>> read_directory(const KvConfig& kv,
                                                           const std::string& prefix) {
    const std::size_t n = static_cast<std::size_t>(std::stol(kv.require(prefix + "s")));
    std::vector<std::pair<std::string, Tensor>> tensors;
    tensors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        tensors.emplace_back(kv.require(base + ".name"),
                             Tensor(shape_from_string(kv.require(base + ".shape"))));
    }
    return tensors;
}

}  // namespace

Checkpoint snapshot_model(const SegmentationModel& model) {
    Checkpoint ckpt;
    ckpt.spec = model.spec();
    for (const auto& p : model.params().params()) {
        ckpt.params.emplace_back(p.name, p.var->value);
    }
    for (const auto& b : model.params().buffers()) {
        ckpt.buffers.emplace_back(b.name, *b.tensor);
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    KvConfig kv;
    const KvConfig spec_kv = ckpt.spec.to_kv();
    for (const auto& [key, value] : spec_kv.items()) {
        kv.set("spec." + key, value);
    }
    describe_tensors(kv, "param", ckpt.params);
    describe_tensors(kv, "buffer", ckpt.buffers);
    describe_tensors(kv, "extra", ckpt.extras);
    for (const auto& [key, value] : ckpt.meta.items()) {
        kv.set("meta." + key, value);
    }

    std::string payload;
    append_doubles(payload, {kSentinel});
    for (const auto* group : {&ckpt.params, &ckpt.buffers, &ckpt.extras}) {
        for (const auto& [name, tensor] : *group) append_doubles(payload, tensor.data);
    }
    kv.set("payload_bytes", std::to_string(payload.size()));
    kv.set("payload_digest", to_hex(fnv1a64(payload.data(), payload.size())));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out << kMagicLine << '\n' << kv.serialize() << kDataLine << '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("short write to checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kMagicLine) {
        throw ValidationError("'" + path + "' is not a version-1 checkpoint");
    }
    std::string header;
    bool saw_data = false;
    while (std::getline(in, line)) {
        if (line == kDataLine) {
            saw_data = true;
            break;
        }
        header += line;
        header += '\n';
    }
    if (!saw_data) throw ValidationError("checkpoint '" + path + "' has no data section");
    const KvConfig kv = KvConfig::parse_text(header);

    const std::size_t payload_bytes =
        static_cast<std::size_t>(std::stol(kv.require("payload_bytes")));
    std::string payload(payload_bytes, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
    if (static_cast<std::size_t>(in.gcount()) != payload_bytes) {
        throw ValidationError("checkpoint '" + path + "' is truncated");
    }
    if (to_hex(fnv1a64(payload.data(), payload.size())) != kv.require("payload_digest")) {
        throw ValidationError("checkpoint '" + path + "' failed its digest check");
    }

    Checkpoint ckpt;
    KvConfig spec_kv;
    for (const auto& [key, value] : kv.items()) {
        if (key.rfind("spec.", 0) == 0) spec_kv.set(key.substr(5), value);
        if (key.rfind("meta.", 0) == 0) ckpt.meta.set(key.substr(5), value);
    }
    ckpt.spec = ModelSpec::from_kv(spec_kv);
    ckpt.params = read_directory(kv, "param");
    ckpt.buffers = read_directory(kv, "buffer");
    ckpt.extras = read_directory(kv, "extra");

    std::size_t offset = 0;
    auto take = [&](std::vector<double>& dst) {
        const std::size_t bytes = dst.size() * sizeof(double);
        if (offset + bytes > payload.size()) {
            throw ValidationError("checkpoint '" + path + "' payload shorter than its directory");
        }
        std::memcpy(dst.data(), payload.data() + offset, bytes);
        offset += bytes;
    };
    std::vector<double> sentinel(1, 0.0);
    take(sentinel);
    if (sentinel[0] != kSentinel) {
        throw ValidationError("checkpoint '" + path + "' payload encoding mismatch");
    }
    for (auto* group : {&ckpt.params, &ckpt.buffers, &ckpt.extras}) {
        for (auto& [name, tensor] : *group) take(tensor.data);
    }
    if (offset != payload.size()) {
        throw ValidationError("checkpoint '" + path + "' payload longer than its directory");
    }
    return ckpt;
}

void restore_into(SegmentationModel& model, const Checkpoint& ckpt) {
    if (!(model.spec() == ckpt.spec)) {
        throw ValidationError("checkpoint spec does not match the target model");
    }
    const auto& params = model.params().params();
    const auto& buffers = model.params().buffers();
    if (params.size() != ckpt.params.size() || buffers.size() != ckpt.buffers.size()) {
        throw ValidationError("checkpoint tensor directory does not match the target model");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, tensor] = ckpt.params[i];
        if (params[i].name != name || params[i].var->value.shape != tensor.shape) {
            throw ValidationError("checkpoint parameter '" + name + "' does not match model '" +
                                  params[i].name + "'");
        }
        params[i].var->value.data = tensor.data;
    }
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        const auto& [name, tensor] = ckpt.buffers[i];
        if (buffers[i].name != name || buffers[i].tensor->shape != tensor.shape) {
            throw ValidationError("checkpoint buffer '" + name + "' does not match model '" +
                                  buffers[i].name + "'");
        }
        buffers[i].tensor->data = tensor.data;
    }
}

std::unique_ptr<SegmentationModel> restore_model(const Checkpoint& ckpt) {
    auto model = build_model(ckpt.spec, 0);
    restore_into(*model, ckpt);
    return model;
}

}  // namespace retseg::models
