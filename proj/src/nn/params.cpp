#include "retseg/nn/params.hpp"

#include <stdexcept>

#include "retseg/core/digest.hpp"

namespace retseg::nn {

namespace {

template <typename Vec>
bool name_taken(const Vec& items, const std::string& name) {
    for (const auto& item : items) {
        if (item.name == name) return true;
    }
    return false;
}

}  // namespace

Var ParamStore::add_param(const std::string& name, Tensor init) {
    if (name_taken(params_, name) || name_taken(buffers_, name)) {
        throw std::runtime_error("param store: duplicate name '" + name + "'");
    }
    Var var = make_leaf(std::move(init), true);
    params_.push_back({name, var});
    return var;
}

std::shared_ptr<Tensor> ParamStore::add_buffer(const std::string& name, Tensor init) {
    if (name_taken(params_, name) || name_taken(buffers_, name)) {
        throw std::runtime_error("param store: duplicate name '" + name + "'");
    }
    auto tensor = std::make_shared<Tensor>(std::move(init));
    buffers_.push_back({name, tensor});
    return tensor;
}

Var ParamStore::find_param(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p.var;
    }
    throw std::runtime_error("param store: no parameter named '" + name + "'");
}

long ParamStore::scalar_count() const {
    long n = 0;
    for (const auto& p : params_) n += p.var->value.numel();
    return n;
}

void ParamStore::zero_grads() {
    for (const auto& p : params_) p.var->zero_grad();
}

std::uint64_t ParamStore::value_digest() const {
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    for (const auto& p : params_) {
        hash = fnv1a64(p.var->value.data.data(), p.var->value.data.size() * sizeof(double), hash);
    }
    for (const auto& b : buffers_) {
        hash = fnv1a64(b.tensor->data.data(), b.tensor->data.size() * sizeof(double), hash);
    }
    return hash;
}

}  // namespace retseg::nn
