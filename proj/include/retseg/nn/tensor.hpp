#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace retseg::nn {

// Dense double-precision array, row-major, usually NCHW. Doubles keep
// finite-difference checks and checkpoint round-trips exact.
struct Tensor {
    std::vector<long> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<long> s, double fill = 0.0);

    long numel() const;
    long dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    double& operator[](long i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](long i) const { return data[static_cast<std::size_t>(i)]; }

    // NCHW accessor.
    double& at4(long n, long c, long h, long w) {
        return data[static_cast<std::size_t>(((n * dim(1) + c) * dim(2) + h) * dim(3) + w)];
    }
    double at4(long n, long c, long h, long w) const {
        return data[static_cast<std::size_t>(((n * dim(1) + c) * dim(2) + h) * dim(3) + w)];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_string() const;

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }
};

long shape_numel(const std::vector<long>& shape);

}  // namespace retseg::nn
