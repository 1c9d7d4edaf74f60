#include <cmath>

#include "doctest.h"
#include "retseg/core/rng.hpp"
#include "retseg/nn/adadelta.hpp"
#include "retseg/nn/gradcheck.hpp"
#include "retseg/nn/init.hpp"
#include "retseg/nn/ops.hpp"
#include "retseg/nn/params.hpp"

using namespace retseg;
using namespace retseg::nn;

namespace {

Tensor random_tensor(std::vector<long> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = scale * rng.next_normal();
    return t;
}

// Keeps every element away from the relu kink so finite differences stay
// valid.
Tensor kink_free(std::vector<long> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) {
        v = rng.next_normal();
        v += v >= 0.0 ? 0.05 : -0.05;
    }
    return t;
}

// Direct convolution, no im2col, no Eigen.
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor* b, long stride, long pad) {
    const long n = x.dim(0), in_c = x.dim(1), h = x.dim(2), width = x.dim(3);
    const long out_c = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const long oh = (h + 2 * pad - kh) / stride + 1;
    const long ow = (width + 2 * pad - kw) / stride + 1;
    Tensor out({n, out_c, oh, ow});
    for (long i = 0; i < n; ++i) {
        for (long oc = 0; oc < out_c; ++oc) {
            for (long oy = 0; oy < oh; ++oy) {
                for (long ox = 0; ox < ow; ++ox) {
                    double s = b ? (*b)[oc] : 0.0;
                    for (long ic = 0; ic < in_c; ++ic) {
                        for (long ky = 0; ky < kh; ++ky) {
                            for (long kx = 0; kx < kw; ++kx) {
                                const long iy = oy * stride - pad + ky;
                                const long ix = ox * stride - pad + kx;
                                if (iy >= 0 && iy < h && ix >= 0 && ix < width) {
                                    s += x.at4(i, ic, iy, ix) * w.at4(oc, ic, ky, kx);
                                }
                            }
                        }
                    }
                    out.at4(i, oc, oy, ox) = s;
                }
            }
        }
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    double m = 0.0;
    for (long i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("conv2d matches the direct-convolution oracle") {
    Rng rng(101);
    SUBCASE("3x3 stride 1 pad 1 with bias") {
        Var x = make_leaf(random_tensor({2, 3, 5, 6}, rng), false);
        Var w = make_leaf(random_tensor({4, 3, 3, 3}, rng), false);
        Var b = make_leaf(random_tensor({4}, rng), false);
        const Var out = conv2d(x, w, b, 1, 1);
        const Tensor expect = conv_oracle(x->value, w->value, &b->value, 1, 1);
        CHECK(max_abs_diff(out->value, expect) < 1e-12);
    }
    SUBCASE("7x7 stride 2 pad 3 without bias") {
        Var x = make_leaf(random_tensor({1, 2, 8, 8}, rng), false);
        Var w = make_leaf(random_tensor({3, 2, 7, 7}, rng), false);
        const Var out = conv2d(x, w, nullptr, 2, 3);
        const Tensor expect = conv_oracle(x->value, w->value, nullptr, 2, 3);
        CHECK(out->value.dim(2) == 4);
        CHECK(max_abs_diff(out->value, expect) < 1e-12);
    }
    SUBCASE("1x1 stride 1 pad 0") {
        Var x = make_leaf(random_tensor({1, 5, 4, 4}, rng), false);
        Var w = make_leaf(random_tensor({2, 5, 1, 1}, rng), false);
        const Var out = conv2d(x, w, nullptr, 1, 0);
        const Tensor expect = conv_oracle(x->value, w->value, nullptr, 1, 0);
        CHECK(max_abs_diff(out->value, expect) < 1e-12);
    }
    SUBCASE("channel mismatch rejected") {
        Var x = make_leaf(Tensor({1, 3, 4, 4}), false);
        Var w = make_leaf(Tensor({2, 4, 3, 3}), false);
        CHECK_THROWS(conv2d(x, w, nullptr, 1, 1));
    }
}

TEST_CASE("conv2d gradients are finite-difference exact") {
    Rng rng(102);
    Var x = make_leaf(random_tensor({1, 2, 4, 4}, rng), true);
    Var w = make_leaf(random_tensor({3, 2, 3, 3}, rng, 0.5), true);
    Var b = make_leaf(random_tensor({3}, rng), true);
    auto loss_fn = [&] {
        const Var out = conv2d(x, w, b, 1, 1);
        Tensor sq({1});
        double s = 0.0;
        for (long i = 0; i < out->value.numel(); ++i) s += out->value[i] * out->value[i];
        sq[0] = 0.5 * s;
        return make_node(std::move(sq), {out}, [](Node& node) {
            const Var& in = node.inputs[0];
            Tensor& g = in->ensure_grad();
            for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0] * in->value[i];
        });
    };
    const auto result = gradcheck(loss_fn, {x, w, b});
    CHECK(result.checked == 32 + 54 + 3);
    CHECK(result.max_rel_error < 1e-6);
}

TEST_CASE("relu, add, concat backward") {
    Rng rng(103);
    Var a = make_leaf(kink_free({1, 2, 3, 3}, rng), true);
    Var b = make_leaf(kink_free({1, 2, 3, 3}, rng), true);
    Var c = make_leaf(kink_free({1, 3, 3, 3}, rng), true);
    auto loss_fn = [&] {
        const Var sum = add(a, b);
        const Var act = relu(sum);
        const Var cat = concat_channels(act, c);
        Tensor total({1});
        for (long i = 0; i < cat->value.numel(); ++i) total[0] += cat->value[i] * (i % 3 + 1);
        return make_node(std::move(total), {cat}, [](Node& node) {
            Tensor& g = node.inputs[0]->ensure_grad();
            for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0] * (i % 3 + 1);
        });
    };
    const auto result = gradcheck(loss_fn, {a, b, c});
    CHECK(result.max_rel_error < 1e-6);

    const Var cat = concat_channels(a, c);
    CHECK(cat->value.dim(1) == 5);
    CHECK(cat->value.at4(0, 0, 1, 1) == a->value.at4(0, 0, 1, 1));
    CHECK(cat->value.at4(0, 2, 1, 1) == c->value.at4(0, 0, 1, 1));
    CHECK_THROWS(concat_channels(a, make_leaf(Tensor({1, 2, 4, 4}), false)));
    CHECK_THROWS(add(a, c));
}

TEST_CASE("maxpool records argmax positions verified by brute force") {
    Rng rng(104);
    Var x = make_leaf(random_tensor({2, 3, 4, 4}, rng), false);
    const PoolResult pool = maxpool2x2(x);
    REQUIRE(pool.out->value.shape == std::vector<long>{2, 3, 2, 2});
    for (long n = 0; n < 2; ++n) {
        for (long c = 0; c < 3; ++c) {
            for (long oy = 0; oy < 2; ++oy) {
                for (long ox = 0; ox < 2; ++ox) {
                    double best = -1e300;
                    long best_idx = -1;
                    for (long dy = 0; dy < 2; ++dy) {
                        for (long dx = 0; dx < 2; ++dx) {
                            const double v = x->value.at4(n, c, 2 * oy + dy, 2 * ox + dx);
                            if (v > best) {
                                best = v;
                                best_idx = (2 * oy + dy) * 4 + (2 * ox + dx);
                            }
                        }
                    }
                    CHECK(pool.out->value.at4(n, c, oy, ox) == best);
                    CHECK((*pool.indices)[((n * 3 + c) * 2 + oy) * 2 + ox] == best_idx);
                }
            }
        }
    }
    CHECK_THROWS(maxpool2x2(make_leaf(Tensor({1, 1, 3, 4}), false)));
}

TEST_CASE("unpool places values at recorded indices and is zero elsewhere") {
    Rng rng(105);
    Var x = make_leaf(random_tensor({1, 2, 4, 4}, rng), true);
    const PoolResult pool = maxpool2x2(x);
    const Var restored = max_unpool2x2(pool.out, pool.indices, 4, 4);

    long nonzero = 0;
    for (long i = 0; i < restored->value.numel(); ++i) {
        if (restored->value[i] != 0.0) ++nonzero;
    }
    CHECK(nonzero <= pool.out->value.numel());

    // Round trip: every pooled max reappears at its original position.
    for (long c = 0; c < 2; ++c) {
        for (long j = 0; j < 4; ++j) {
            const long idx = (*pool.indices)[c * 4 + j];
            CHECK(restored->value.data[static_cast<std::size_t>(c * 16 + idx)] ==
                  pool.out->value.data[static_cast<std::size_t>(c * 4 + j)]);
        }
    }

    // Tampered index outside its 2x2 window must be rejected.
    auto bad = std::make_shared<std::vector<long>>(*pool.indices);
    (*bad)[0] = 15;
    CHECK_THROWS_WITH_AS((void)max_unpool2x2(pool.out, bad, 4, 4), doctest::Contains("window"),
                         std::runtime_error);
}

TEST_CASE("pool and unpool path is finite-difference exact away from ties") {
    Rng rng(106);
    Var x = make_leaf(random_tensor({1, 2, 4, 4}, rng), true);
    auto loss_fn = [&] {
        const PoolResult pool = maxpool2x2(x);
        const Var up = max_unpool2x2(pool.out, pool.indices, 4, 4);
        Tensor total({1});
        for (long i = 0; i < up->value.numel(); ++i) total[0] += up->value[i] * (i % 5 - 2);
        return make_node(std::move(total), {up}, [](Node& node) {
            Tensor& g = node.inputs[0]->ensure_grad();
            for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0] * (i % 5 - 2);
        });
    };
    const auto result = gradcheck(loss_fn, {x});
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("adaptive average pooling") {
    Rng rng(107);
    SUBCASE("bin 1 equals the global mean") {
        Var x = make_leaf(random_tensor({1, 2, 6, 6}, rng), false);
        const Var g = adaptive_avg_pool(x, 1, 1);
        for (long c = 0; c < 2; ++c) {
            double mean = 0.0;
            for (long j = 0; j < 36; ++j) mean += x->value.data[static_cast<std::size_t>(c * 36 + j)];
            mean /= 36.0;
            CHECK(g->value.at4(0, c, 0, 0) == doctest::Approx(mean).epsilon(1e-12));
        }
    }
    SUBCASE("constant input stays constant for any bin count") {
        Var x = make_leaf(Tensor({1, 1, 6, 6}, 3.25), false);
        for (long bins : {1L, 2L, 3L, 4L, 6L, 7L}) {
            const Var out = adaptive_avg_pool(x, bins, bins);
            for (long i = 0; i < out->value.numel(); ++i) CHECK(out->value[i] == 3.25);
        }
    }
    SUBCASE("upscaling windows cover at least one cell") {
        Var x = make_leaf(random_tensor({1, 1, 2, 2}, rng), false);
        const Var out = adaptive_avg_pool(x, 6, 6);
        CHECK(out->value.dim(2) == 6);
        CHECK(out->value.at4(0, 0, 0, 0) == x->value.at4(0, 0, 0, 0));
        CHECK(out->value.at4(0, 0, 5, 5) == x->value.at4(0, 0, 1, 1));
    }
    SUBCASE("gradients") {
        Var x = make_leaf(random_tensor({1, 2, 6, 6}, rng), true);
        auto loss_fn = [&] {
            const Var pooled = adaptive_avg_pool(x, 3, 3);
            Tensor total({1});
            for (long i = 0; i < pooled->value.numel(); ++i) total[0] += pooled->value[i];
            return make_node(std::move(total), {pooled}, [](Node& node) {
                Tensor& g = node.inputs[0]->ensure_grad();
                for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0];
            });
        };
        CHECK(gradcheck(loss_fn, {x}).max_rel_error < 1e-6);
    }
}

TEST_CASE("upsampling composes exactly across integer factors") {
    Rng rng(108);
    Var x = make_leaf(random_tensor({1, 2, 3, 4}, rng), false);

    const Var up4_direct = upsample_linear(x, 4);
    const Var up4_chained = upsample_linear(upsample_linear(x, 2), 2);
    CHECK(max_abs_diff(up4_direct->value, up4_chained->value) < 1e-12);

    const Var up32_direct = upsample_linear(x, 32);
    const Var up32_chained = upsample_linear(upsample_linear(upsample_linear(x, 2), 2), 8);
    CHECK(max_abs_diff(up32_direct->value, up32_chained->value) < 1e-9);

    // Knots reproduce the source exactly; edges clamp.
    const Var up2 = upsample_linear(x, 2);
    CHECK(up2->value.at4(0, 0, 2, 4) == x->value.at4(0, 0, 1, 2));
    CHECK(up2->value.at4(0, 1, 5, 7) == x->value.at4(0, 1, 2, 3));
    CHECK(up2->value.at4(0, 0, 0, 1) ==
          doctest::Approx(0.5 * (x->value.at4(0, 0, 0, 0) + x->value.at4(0, 0, 0, 1)))
              .epsilon(1e-12));
    CHECK(upsample_linear(x, 1)->value.data == x->value.data);
}

TEST_CASE("upsampling gradients") {
    Rng rng(109);
    Var x = make_leaf(random_tensor({1, 1, 3, 3}, rng), true);
    auto loss_fn = [&] {
        const Var up = upsample_linear(x, 3);
        Tensor total({1});
        for (long i = 0; i < up->value.numel(); ++i) total[0] += up->value[i] * (i % 4);
        return make_node(std::move(total), {up}, [](Node& node) {
            Tensor& g = node.inputs[0]->ensure_grad();
            for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0] * (i % 4);
        });
    };
    CHECK(gradcheck(loss_fn, {x}).max_rel_error < 1e-6);
}

TEST_CASE("batchnorm normalizes batches and tracks running stats") {
    Rng rng(110);
    Var x = make_leaf(random_tensor({4, 3, 5, 5}, rng, 2.0), false);
    Var gamma = make_leaf(Tensor({3}, 1.0), false);
    Var beta = make_leaf(Tensor({3}, 0.0), false);
    Tensor run_mean({3}, 0.0);
    Tensor run_var({3}, 1.0);

    const Var out = batchnorm2d(x, gamma, beta, run_mean, run_var, true);
    const long per_channel = 4 * 5 * 5;
    for (long c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (long n = 0; n < 4; ++n) {
            for (long j = 0; j < 25; ++j) {
                mean += out->value.data[static_cast<std::size_t>(((n * 3 + c) * 25) + j)];
            }
        }
        mean /= per_channel;
        for (long n = 0; n < 4; ++n) {
            for (long j = 0; j < 25; ++j) {
                const double d =
                    out->value.data[static_cast<std::size_t>(((n * 3 + c) * 25) + j)] - mean;
                var += d * d;
            }
        }
        var /= per_channel;
        CHECK(std::abs(mean) < 1e-10);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(run_mean[c] != 0.0);
        CHECK(run_var[c] != 1.0);
    }

    // Eval mode with frozen buffers is deterministic and buffer-preserving.
    const Tensor mean_before = run_mean;
    const Var eval_out = batchnorm2d(x, gamma, beta, run_mean, run_var, false);
    CHECK(run_mean.data == mean_before.data);
    CHECK(eval_out->value.numel() == x->value.numel());
}

TEST_CASE("batchnorm gradients in both modes") {
    Rng rng(111);
    Var x = make_leaf(random_tensor({2, 2, 3, 3}, rng), true);
    Var gamma = make_leaf(random_tensor({2}, rng, 0.3), true);
    Var beta = make_leaf(random_tensor({2}, rng, 0.3), true);
    for (const bool training : {true, false}) {
        Tensor run_mean({2}, 0.1);
        Tensor run_var({2}, 0.9);
        auto loss_fn = [&] {
            const Var out = batchnorm2d(x, gamma, beta, run_mean, run_var, training);
            Tensor total({1});
            for (long i = 0; i < out->value.numel(); ++i) total[0] += out->value[i] * (i % 3);
            return make_node(std::move(total), {out}, [](Node& node) {
                Tensor& g = node.inputs[0]->ensure_grad();
                for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0] * (i % 3);
            });
        };
        const auto result = gradcheck(loss_fn, {x, gamma, beta});
        CAPTURE(training);
        CHECK(result.max_rel_error < 1e-4);
    }
}

TEST_CASE("cross entropy value and gradients") {
    SUBCASE("uniform logits give log C") {
        Var logits = make_leaf(Tensor({1, 6, 2, 2}, 0.0), false);
        Tensor labels({1, 2, 2}, 3.0);
        const Var loss = softmax_cross_entropy(logits, labels);
        CHECK(loss->value[0] == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    }
    SUBCASE("gradcheck unweighted and weighted") {
        Rng rng(112);
        Var logits = make_leaf(random_tensor({2, 4, 3, 3}, rng), true);
        Tensor labels({2, 3, 3});
        for (long i = 0; i < labels.numel(); ++i) labels[i] = static_cast<double>(i % 4);
        for (const auto& weights :
             {std::vector<double>{}, std::vector<double>{0.5, 2.0, 1.0, 0.25}}) {
            auto loss_fn = [&] { return softmax_cross_entropy(logits, labels, weights); };
            CHECK(gradcheck(loss_fn, {logits}).max_rel_error < 1e-6);
        }
    }
    SUBCASE("label out of range rejected") {
        Var logits = make_leaf(Tensor({1, 3, 1, 1}), false);
        Tensor labels({1, 1, 1}, 3.0);
        CHECK_THROWS(softmax_cross_entropy(logits, labels));
    }
}

TEST_CASE("argmax mask picks the lowest index on ties") {
    Tensor scores({1, 3, 1, 2});
    scores.at4(0, 0, 0, 0) = 1.0;
    scores.at4(0, 1, 0, 0) = 1.0;
    scores.at4(0, 2, 0, 0) = 0.5;
    scores.at4(0, 0, 0, 1) = -1.0;
    scores.at4(0, 1, 0, 1) = 2.0;
    scores.at4(0, 2, 0, 1) = 2.0;
    const MaskImage mask = argmax_mask(scores, 0);
    CHECK(mask.at(0, 0) == 0);
    CHECK(mask.at(0, 1) == 1);
}

TEST_CASE("adadelta follows the accumulator recurrences") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        ParamStore store;
        Var p = store.add_param("p", Tensor({2}, 1.5));
        AdadeltaOptimizer opt;
        p->ensure_grad();  // zeros
        opt.step(store);
        CHECK(p->value[0] == 1.5);
        CHECK(p->value[1] == 1.5);
    }
    SUBCASE("first step matches the closed form") {
        ParamStore store;
        Var p = store.add_param("p", Tensor({1}, 1.0));
        AdadeltaOptimizer opt;
        const double g = 0.7;
        p->ensure_grad()[0] = g;
        opt.step(store);
        const double rho = 0.95, eps = 1e-6;
        const double expect = -std::sqrt(eps) / std::sqrt((1.0 - rho) * g * g + eps) * g;
        CHECK(p->value[0] == doctest::Approx(1.0 + expect).epsilon(1e-12));
        CHECK(opt.grad_sq()[0][0] == doctest::Approx((1.0 - rho) * g * g).epsilon(1e-12));
        CHECK(opt.delta_sq()[0][0] ==
              doctest::Approx((1.0 - rho) * expect * expect).epsilon(1e-12));
    }
    SUBCASE("hand-simulated recurrence over several steps") {
        ParamStore store;
        Var p = store.add_param("p", Tensor({1}, 0.0));
        AdadeltaOptimizer opt;
        const double rho = 0.95, eps = 1e-6;
        double eg = 0.0, edx = 0.0, x = 0.0;
        const double grads[] = {0.3, -0.8, 0.05, 1.2, -0.4};
        for (const double g : grads) {
            p->zero_grad();
            p->ensure_grad()[0] = g;
            opt.step(store);
            eg = rho * eg + (1 - rho) * g * g;
            const double dx = -std::sqrt(edx + eps) / std::sqrt(eg + eps) * g;
            edx = rho * edx + (1 - rho) * dx * dx;
            x += dx;
            CHECK(p->value[0] == doctest::Approx(x).epsilon(1e-12));
        }
    }
    SUBCASE("quadratic descent shrinks |x| monotonically") {
        ParamStore store;
        Var p = store.add_param("x", Tensor({1}, 1.0));
        AdadeltaOptimizer opt;
        double prev = 1.0;
        for (int i = 0; i < 100; ++i) {
            p->zero_grad();
            p->ensure_grad()[0] = 2.0 * p->value[0];
            opt.step(store);
            CHECK(std::abs(p->value[0]) < prev);
            prev = std::abs(p->value[0]);
        }
    }
    SUBCASE("non-finite gradient is rejected") {
        ParamStore store;
        Var p = store.add_param("p", Tensor({1}, 0.0));
        AdadeltaOptimizer opt;
        p->ensure_grad()[0] = std::nan("");
        CHECK_THROWS_WITH_AS(opt.step(store), doctest::Contains("non-finite"),
                             std::runtime_error);
    }
    SUBCASE("rho 0 with large eps stays bounded") {
        ParamStore store;
        Var p = store.add_param("p", Tensor({1}, 1.0));
        AdadeltaOptimizer opt(0.0, 10.0, 1.0);
        for (int i = 0; i < 10; ++i) {
            p->zero_grad();
            p->ensure_grad()[0] = 1000.0;
            opt.step(store);
            CHECK(std::isfinite(p->value[0]));
        }
    }
}

TEST_CASE("param store registration, digest, and duplicate rejection") {
    Rng rng(113);
    ParamStore a;
    Var w = a.add_param("conv.weight", random_tensor({2, 2, 3, 3}, rng));
    a.add_buffer("bn.running_mean", Tensor({2}, 0.0));
    CHECK(a.scalar_count() == 36);
    CHECK(a.find_param("conv.weight") == w);
    CHECK_THROWS(a.add_param("conv.weight", Tensor({1})));
    CHECK_THROWS(a.add_buffer("bn.running_mean", Tensor({1})));
    CHECK_THROWS((void)a.find_param("missing"));

    Rng rng2(113);
    ParamStore b;
    b.add_param("conv.weight", random_tensor({2, 2, 3, 3}, rng2));
    b.add_buffer("bn.running_mean", Tensor({2}, 0.0));
    CHECK(a.value_digest() == b.value_digest());
    w->value[0] += 1e-9;
    CHECK(a.value_digest() != b.value_digest());
}

TEST_CASE("backward requires a scalar root and accumulates through shared nodes") {
    Rng rng(114);
    Var x = make_leaf(random_tensor({1, 1, 2, 2}, rng), true);
    CHECK_THROWS(backward(relu(x)));

    // y = x + x doubles the gradient.
    const Var y = add(x, x);
    Tensor total({1});
    for (long i = 0; i < y->value.numel(); ++i) total[0] += y->value[i];
    const Var loss = make_node(std::move(total), {y}, [](Node& node) {
        Tensor& g = node.inputs[0]->ensure_grad();
        for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0];
    });
    backward(loss);
    for (long i = 0; i < 4; ++i) CHECK(x->grad[i] == 2.0);
}
