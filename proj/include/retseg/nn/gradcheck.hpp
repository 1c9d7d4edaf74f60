#pragma once

#include <functional>
#include <vector>

#include "retseg/nn/autograd.hpp"

namespace retseg::nn {

struct GradcheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    long checked = 0;
};

// Central finite differences (default step 1e-3) against the analytic
// gradients of loss_fn, a closure rebuilding the scalar loss from the
// current leaf values. Relative error uses |a-n| / max(|a|+|n|, 1e-6).
GradcheckResult gradcheck(const std::function<Var()>& loss_fn, const std::vector<Var>& leaves,
                          double step = 1e-3);

}  // namespace retseg::nn
