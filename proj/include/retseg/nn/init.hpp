#pragma once

#include "retseg/core/rng.hpp"
#include "retseg/nn/tensor.hpp"

namespace retseg::nn {

// He-style normal init, std = sqrt(2 / fan_in).
void kaiming_normal(Tensor& t, Rng& rng, long fan_in);

void fill(Tensor& t, double value);

}  // namespace retseg::nn
