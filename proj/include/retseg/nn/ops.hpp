#pragma once

#include <memory>
#include <vector>

#include "retseg/core/mask.hpp"
#include "retseg/nn/autograd.hpp"

namespace retseg::nn {

// All ops take NCHW activations. Shapes are validated and mismatches
// throw std::runtime_error.

// w: [outC, inC, kh, kw]; b: [outC] or null for no bias.
Var conv2d(const Var& x, const Var& w, const Var& b, long stride, long pad);

Var relu(const Var& x);
Var add(const Var& a, const Var& b);
Var concat_channels(const Var& a, const Var& b);

// 2x2/stride-2 max pooling; indices record the flat in-plane argmax per
// output element for the matching unpool.
struct PoolResult {
    Var out;
    std::shared_ptr<std::vector<long>> indices;
    long in_h = 0;
    long in_w = 0;
};
PoolResult maxpool2x2(const Var& x);

// Places each value at its recorded position, zeros elsewhere. Every
// index must lie inside its output element's 2x2 window.
Var max_unpool2x2(const Var& x, const std::shared_ptr<std::vector<long>>& indices, long out_h,
                  long out_w);

Var adaptive_avg_pool(const Var& x, long out_h, long out_w);

// Integer-factor bilinear upsampling with source = dst/factor and
// clamp-to-edge, so chained factors compose to the product factor.
Var upsample_linear(const Var& x, long factor);

// gamma/beta: [C]. Running buffers are updated in training mode only.
Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                Tensor& running_var, bool training, double momentum = 0.1, double eps = 1e-5);

// labels: [N,H,W] holding integer class ids; returns mean per-pixel
// categorical cross-entropy as a scalar. Optional per-class weights
// follow the weighted-mean convention (divide by summed weights).
Var softmax_cross_entropy(const Var& logits, const Tensor& labels,
                          const std::vector<double>& class_weights = {});

// Channel argmax of one sample of a [N,C,H,W] score tensor; lowest class
// index wins ties.
MaskImage argmax_mask(const Tensor& scores, long sample);

}  // namespace retseg::nn
