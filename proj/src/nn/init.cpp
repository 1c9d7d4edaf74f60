#include "retseg/nn/init.hpp"

#include <cmath>
#include <stdexcept>

namespace retseg::nn {

void kaiming_normal(Tensor& t, Rng& rng, long fan_in) {
    if (fan_in <= 0) throw std::runtime_error("kaiming_normal: fan_in must be positive");
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = stddev * rng.next_normal();
}

void fill(Tensor& t, double value) {
    for (auto& v : t.data) v = value;
}

}  // namespace retseg::nn
