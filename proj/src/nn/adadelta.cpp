#include "retseg/nn/adadelta.hpp"

#include <cmath>
#include <stdexcept>

namespace retseg::nn {

AdadeltaOptimizer::AdadeltaOptimizer(double rho, double eps, double lr)
    : rho_(rho), eps_(eps), lr_(lr) {
    if (rho < 0.0 || rho >= 1.0) throw std::runtime_error("adadelta: rho must be in [0,1)");
    if (eps <= 0.0) throw std::runtime_error("adadelta: eps must be positive");
}

void AdadeltaOptimizer::ensure_state(const ParamStore& store) {
    if (!grad_sq_.empty()) {
        if (grad_sq_.size() != store.params().size()) {
            throw std::runtime_error("adadelta: state does not match parameter count");
        }
        return;
    }
    for (const auto& p : store.params()) {
        grad_sq_.emplace_back(p.var->value.shape);
        delta_sq_.emplace_back(p.var->value.shape);
    }
}

void AdadeltaOptimizer::step(const ParamStore& store) {
    ensure_state(store);
    for (std::size_t i = 0; i < store.params().size(); ++i) {
        const auto& p = store.params()[i];
        Tensor& value = p.var->value;
        Tensor& eg = grad_sq_[i];
        Tensor& edx = delta_sq_[i];
        if (!p.var->has_grad()) continue;
        const Tensor& grad = p.var->grad;
        for (long j = 0; j < value.numel(); ++j) {
            const double g = grad[j];
            if (!std::isfinite(g)) {
                throw std::runtime_error("adadelta: non-finite gradient in " + p.name);
            }
            eg[j] = rho_ * eg[j] + (1.0 - rho_) * g * g;
            const double dx = -std::sqrt(edx[j] + eps_) / std::sqrt(eg[j] + eps_) * g;
            edx[j] = rho_ * edx[j] + (1.0 - rho_) * dx * dx;
            value[j] += lr_ * dx;
        }
    }
}

}  // namespace retseg::nn
