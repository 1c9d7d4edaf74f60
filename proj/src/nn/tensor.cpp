#include "retseg/nn/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace retseg::nn {

long shape_numel(const std::vector<long>& shape) {
    long n = 1;
    for (long d : shape) {
        if (d < 0) throw std::runtime_error("tensor: negative dimension");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<long> s, double fill)
    : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape)), fill) {}

long Tensor::numel() const {
    return static_cast<long>(data.size());
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

}  // namespace retseg::nn
