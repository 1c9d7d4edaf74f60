#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "retseg/nn/tensor.hpp"

namespace retseg::nn {

// One node of the reverse-mode tape. Interior nodes are created per
// forward pass and freed when the output goes out of scope; leaves
// (parameters, inputs) persist across steps.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on first use, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    // Propagates this->grad into inputs' grads.
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad();
    bool has_grad() const { return !grad.data.empty(); }
    void zero_grad() { grad = Tensor(); }
};

using Var = std::shared_ptr<Node>;

Var make_leaf(Tensor value, bool requires_grad);
Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);

// Reverse sweep from a scalar root; accumulates into every reachable
// node with requires_grad set.
void backward(const Var& root);

}  // namespace retseg::nn
