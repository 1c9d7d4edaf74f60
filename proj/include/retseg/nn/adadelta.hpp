#pragma once

#include <vector>

#include "retseg/nn/params.hpp"

namespace retseg::nn {

// ADADELTA with the method's default hyperparameters: decay rho = 0.95,
// eps = 1e-6, learning-rate multiplier 1.0. Per-parameter accumulators:
//   Eg  <- rho*Eg  + (1-rho)*g^2
//   dx   = -sqrt(Edx + eps)/sqrt(Eg + eps) * g
//   Edx <- rho*Edx + (1-rho)*dx^2
class AdadeltaOptimizer {
public:
    explicit AdadeltaOptimizer(double rho = 0.95, double eps = 1e-6, double lr = 1.0);

    // Applies one update from the current grads; missing grads count as
    // zero. Throws on non-finite gradients.
    void step(const ParamStore& store);

    double rho() const { return rho_; }
    double eps() const { return eps_; }
    double lr() const { return lr_; }

    // Accumulators in parameter order; exposed for checkpointing.
    std::vector<Tensor>& grad_sq() { return grad_sq_; }
    std::vector<Tensor>& delta_sq() { return delta_sq_; }
    const std::vector<Tensor>& grad_sq() const { return grad_sq_; }
    const std::vector<Tensor>& delta_sq() const { return delta_sq_; }

private:
    void ensure_state(const ParamStore& store);

    double rho_;
    double eps_;
    double lr_;
    std::vector<Tensor> grad_sq_;
    std::vector<Tensor> delta_sq_;
};

}  // namespace retseg::nn
