#pragma once

#include <string>

#include "retseg/core/rng.hpp"
#include "retseg/nn/ops.hpp"
#include "retseg/nn/params.hpp"

namespace retseg::models {

using nn::ParamStore;
using nn::Tensor;
using nn::Var;

struct Conv2dLayer {
    Var w;
    Var b;  // null when the layer feeds a batchnorm
    long stride = 1;
    long pad = 0;

    Conv2dLayer() = default;
    Conv2dLayer(ParamStore& store, const std::string& name, long in_c, long out_c, long k,
                long stride, long pad, bool bias, Rng& rng);
    Var forward(const Var& x) const { return nn::conv2d(x, w, b, stride, pad); }
};

struct BatchNorm2dLayer {
    Var gamma;
    Var beta;
    std::shared_ptr<Tensor> running_mean;
    std::shared_ptr<Tensor> running_var;

    BatchNorm2dLayer() = default;
    BatchNorm2dLayer(ParamStore& store, const std::string& name, long channels);
    Var forward(const Var& x, bool training) const {
        return nn::batchnorm2d(x, gamma, beta, *running_mean, *running_var, training);
    }
};

// conv (bias-free) + batchnorm + relu, the project's standard unit.
struct ConvBnRelu {
    Conv2dLayer conv;
    BatchNorm2dLayer bn;

    ConvBnRelu() = default;
    ConvBnRelu(ParamStore& store, const std::string& name, long in_c, long out_c, long k,
               long stride, long pad, Rng& rng);
    Var forward(const Var& x, bool training) const {
        return nn::relu(bn.forward(conv.forward(x), training));
    }
};

// Bottleneck residual block: 1x1 reduce to width/4, 3x3 (optionally
// strided), 1x1 expand to width, projection shortcut when shapes change.
struct Bottleneck {
    Conv2dLayer reduce;
    BatchNorm2dLayer reduce_bn;
    Conv2dLayer mid;
    BatchNorm2dLayer mid_bn;
    Conv2dLayer expand;
    BatchNorm2dLayer expand_bn;
    bool has_projection = false;
    Conv2dLayer proj;
    BatchNorm2dLayer proj_bn;

    Bottleneck() = default;
    Bottleneck(ParamStore& store, const std::string& name, long in_c, long width, long stride,
               Rng& rng);
    Var forward(const Var& x, bool training) const;
};

}  // namespace retseg::models
