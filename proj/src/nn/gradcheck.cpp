#include "retseg/nn/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace retseg::nn {

GradcheckResult gradcheck(const std::function<Var()>& loss_fn, const std::vector<Var>& leaves,
                          double step) {
    for (const auto& leaf : leaves) leaf->zero_grad();
    const Var loss = loss_fn();
    backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(leaves.size());
    for (const auto& leaf : leaves) {
        analytic.push_back(leaf->has_grad() ? leaf->grad : Tensor(leaf->value.shape));
    }

    GradcheckResult result;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Tensor& value = leaves[li]->value;
        for (long j = 0; j < value.numel(); ++j) {
            const double saved = value[j];
            value[j] = saved + step;
            const double up = loss_fn()->value[0];
            value[j] = saved - step;
            const double down = loss_fn()->value[0];
            value[j] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[li][j];
            const double abs_err = std::abs(a - numeric);
            const double rel_err = abs_err / std::max(std::abs(a) + std::abs(numeric), 1e-6);
            result.max_abs_error = std::max(result.max_abs_error, abs_err);
            result.max_rel_error = std::max(result.max_rel_error, rel_err);
            result.checked += 1;
        }
    }
    for (const auto& leaf : leaves) leaf->zero_grad();
    return result;
}

}  // namespace retseg::nn
