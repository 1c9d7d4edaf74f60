#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "retseg/nn/autograd.hpp"

namespace retseg::nn {

struct Parameter {
    std::string name;
    Var var;
};

struct NamedBuffer {
    std::string name;
    std::shared_ptr<Tensor> tensor;
};

// Ordered registry of a model's trainable parameters and running-stat
// buffers. Registration order is the checkpoint order.
class ParamStore {
public:
    Var add_param(const std::string& name, Tensor init);
    std::shared_ptr<Tensor> add_buffer(const std::string& name, Tensor init);

    const std::vector<Parameter>& params() const { return params_; }
    const std::vector<NamedBuffer>& buffers() const { return buffers_; }

    Var find_param(const std::string& name) const;

    long scalar_count() const;
    void zero_grads();

    // FNV-1a over all parameter and buffer bytes, registration order.
    std::uint64_t value_digest() const;

private:
    std::vector<Parameter> params_;
    std::vector<NamedBuffer> buffers_;
};

}  // namespace retseg::nn
