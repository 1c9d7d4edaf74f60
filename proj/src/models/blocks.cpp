#include "retseg/models/blocks.hpp"

#include "retseg/nn/init.hpp"

namespace retseg::models {

Conv2dLayer::Conv2dLayer(ParamStore& store, const std::string& name, long in_c, long out_c,
                         long k, long stride_, long pad_, bool bias, Rng& rng)
    : stride(stride_), pad(pad_) {
    Tensor weight({out_c, in_c, k, k});
    nn::kaiming_normal(weight, rng, in_c * k * k);
    w = store.add_param(name + ".weight", weight);
    if (bias) {
        b = store.add_param(name + ".bias", Tensor({out_c}, 0.0));
    }
}

BatchNorm2dLayer::BatchNorm2dLayer(ParamStore& store, const std::string& name, long channels) {
    gamma = store.add_param(name + ".gamma", Tensor({channels}, 1.0));
    beta = store.add_param(name + ".beta", Tensor({channels}, 0.0));
    running_mean = store.add_buffer(name + ".running_mean", Tensor({channels}, 0.0));
    running_var = store.add_buffer(name + ".running_var", Tensor({channels}, 1.0));
}

ConvBnRelu::ConvBnRelu(ParamStore& store, const std::string& name, long in_c, long out_c, long k,
                       long stride, long pad, Rng& rng)
    : conv(store, name + ".conv", in_c, out_c, k, stride, pad, false, rng),
      bn(store, name + ".bn", out_c) {}

Bottleneck::Bottleneck(ParamStore& store, const std::string& name, long in_c, long width,
                       long stride, Rng& rng) {
    const long mid_c = width / 4;
    reduce = Conv2dLayer(store, name + ".reduce", in_c, mid_c, 1, 1, 0, false, rng);
    reduce_bn = BatchNorm2dLayer(store, name + ".reduce_bn", mid_c);
    mid = Conv2dLayer(store, name + ".mid", mid_c, mid_c, 3, stride, 1, false, rng);
    mid_bn = BatchNorm2dLayer(store, name + ".mid_bn", mid_c);
    expand = Conv2dLayer(store, name + ".expand", mid_c, width, 1, 1, 0, false, rng);
    expand_bn = BatchNorm2dLayer(store, name + ".expand_bn", width);
    has_projection = in_c != width || stride != 1;
    if (has_projection) {
        proj = Conv2dLayer(store, name + ".proj", in_c, width, 1, stride, 0, false, rng);
        proj_bn = BatchNorm2dLayer(store, name + ".proj_bn", width);
    }
}

Var Bottleneck::forward(const Var& x, bool training) const {
    Var h = nn::relu(reduce_bn.forward(reduce.forward(x), training));
    h = nn::relu(mid_bn.forward(mid.forward(h), training));
    h = expand_bn.forward(expand.forward(h), training);
    Var skip = has_projection ? proj_bn.forward(proj.forward(x), training) : x;
    return nn::relu(nn::add(h, skip));
}

}  // namespace retseg::models
