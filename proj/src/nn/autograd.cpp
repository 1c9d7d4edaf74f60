#include "retseg/nn/autograd.hpp"

#include <stdexcept>
#include <unordered_set>

namespace retseg::nn {

Tensor& Node::ensure_grad() {
    if (grad.data.empty()) grad = Tensor(value.shape);
    return grad;
}

Var make_leaf(Tensor value, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return node;
}

Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
    for (const auto& in : node->inputs) {
        node->requires_grad = node->requires_grad || in->requires_grad;
    }
    return node;
}

namespace {

void topo_visit(const Var& node, std::unordered_set<Node*>& seen, std::vector<Var>& order) {
    if (!seen.insert(node.get()).second) return;
    for (const auto& in : node->inputs) topo_visit(in, seen, order);
    order.push_back(node);
}

}  // namespace

void backward(const Var& root) {
    if (root->value.numel() != 1) {
        throw std::runtime_error("backward: root must be scalar, got " +
                                 root->value.shape_string());
    }
    std::unordered_set<Node*> seen;
    std::vector<Var> order;
    topo_visit(root, seen, order);
    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& node = **it;
        if (node.backward_fn && node.requires_grad && node.has_grad()) {
            node.backward_fn(node);
        }
    }
}

}  // namespace retseg::nn
