#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "retseg/core/digest.hpp"
#include "retseg/core/rng.hpp"
#include "retseg/models/backbone.hpp"
#include "retseg/models/checkpoint.hpp"
#include "retseg/models/model.hpp"
#include "retseg/nn/gradcheck.hpp"
#include "retseg/nn/init.hpp"
#include "retseg/nn/ops.hpp"

using namespace retseg;
using namespace retseg::nn;
using namespace retseg::models;

namespace {

ModelSpec mini_spec(Architecture arch, int h = 64, int w = 64) {
    ModelSpec spec;
    spec.architecture = arch;
    spec.backbone = BackboneConfig::from_identifier("resnet50-mini");
    spec.input_h = h;
    spec.input_w = w;
    spec.decoder_width = spec.backbone.stage_widths[0];
    return spec;
}

Tensor random_tensor(std::vector<long> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = scale * rng.next_normal();
    return t;
}

Tensor kink_free(std::vector<long> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data) {
        v = rng.next_normal();
        v += v >= 0.0 ? 0.05 : -0.05;
    }
    return t;
}

// Smooth scalarization for gradchecks: 0.5 * sum(v^2).
Var half_square_sum(const Var& out) {
    Tensor sq({1});
    double s = 0.0;
    for (long i = 0; i < out->value.numel(); ++i) s += out->value[i] * out->value[i];
    sq[0] = 0.5 * s;
    return make_node(std::move(sq), {out}, [](Node& node) {
        const Var& in = node.inputs[0];
        Tensor& g = in->ensure_grad();
        for (long i = 0; i < g.numel(); ++i) g[i] += node.grad[0] * in->value[i];
    });
}

std::uint64_t tensor_digest(const Tensor& t) {
    return fnv1a64(t.data.data(), t.data.size() * sizeof(double));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape == b.shape);
    double m = 0.0;
    for (long i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

const std::array<Architecture, 6> kAllArchs = {Architecture::ragnet, Architecture::pspnet,
                                               Architecture::segnet, Architecture::unet,
                                               Architecture::fcn8,   Architecture::fcn32};

}  // namespace

TEST_CASE("every architecture maps [n,3,h,w] to [n,6,h,w]") {
    for (const auto size : {64, 96}) {
        for (const auto arch : kAllArchs) {
            CAPTURE(to_string(arch));
            CAPTURE(size);
            auto model = build_model(mini_spec(arch, size, size), 11);
            Rng rng(42);
            const Var x = make_leaf(random_tensor({1, 3, size, size}, rng), false);
            const Var scores = model->forward(x, false);
            REQUIRE(scores->value.shape == std::vector<long>({1, 6, size, size}));
            for (double v : scores->value.data) REQUIRE(std::isfinite(v));
            const MaskImage mask = argmax_mask(scores->value, 0);
            CHECK(mask.width == size);
            CHECK(mask.height == size);
            CHECK(validate_mask(mask, default_class_map()).empty());
        }
    }
}

TEST_CASE("forward rejects inputs that disagree with the spec") {
    auto model = build_model(mini_spec(Architecture::unet), 1);
    Rng rng(1);
    CHECK_THROWS_AS((void)model->forward(make_leaf(random_tensor({1, 3, 32, 32}, rng), false),
                                         false),
                    ValidationError);
    CHECK_THROWS_AS((void)model->forward(make_leaf(random_tensor({1, 1, 64, 64}, rng), false),
                                         false),
                    ValidationError);
}

TEST_CASE("same spec and seed build bit-identical models") {
    for (const auto arch : {Architecture::ragnet, Architecture::segnet, Architecture::fcn8}) {
        CAPTURE(to_string(arch));
        auto a = build_model(mini_spec(arch), 77);
        auto b = build_model(mini_spec(arch), 77);
        auto c = build_model(mini_spec(arch), 78);
        CHECK(a->params().value_digest() == b->params().value_digest());
        CHECK(a->params().value_digest() != c->params().value_digest());

        Rng rng(5);
        const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
        const Var ya = a->forward(x, false);
        const Var yb = b->forward(x, false);
        CHECK(tensor_digest(ya->value) == tensor_digest(yb->value));
    }
}

TEST_CASE("constant-zero input gives a fixed output for fixed parameters") {
    auto model = build_model(mini_spec(Architecture::pspnet), 3);
    const Var x = make_leaf(Tensor({1, 3, 64, 64}, 0.0), false);
    const Var y1 = model->forward(x, false);
    const Var y2 = model->forward(x, false);
    CHECK(tensor_digest(y1->value) == tensor_digest(y2->value));
}

TEST_CASE("parameter counts order as documented") {
    std::map<Architecture, long> counts;
    for (const auto arch : kAllArchs) {
        counts[arch] = build_model(mini_spec(arch), 1)->parameter_count();
        MESSAGE(to_string(arch), " parameters: ", counts[arch]);
    }
    CHECK(counts[Architecture::segnet] < counts[Architecture::unet]);
    CHECK(counts[Architecture::fcn32] < counts[Architecture::fcn8]);

    ModelSpec ablated = mini_spec(Architecture::ragnet);
    ablated.rag_stride4_lateral = false;
    CHECK(build_model(ablated, 1)->parameter_count() < counts[Architecture::ragnet]);
}

TEST_CASE("cross-entropy training step reaches every parameter") {
    for (const auto arch : kAllArchs) {
        CAPTURE(to_string(arch));
        auto model = build_model(mini_spec(arch), 19);
        Rng rng(20);
        const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
        Tensor labels({1, 64, 64});
        for (auto& v : labels.data) v = static_cast<double>(rng.next_int(0, 5));

        const Var scores = model->forward(x, true);
        const Var loss = softmax_cross_entropy(scores, labels);
        backward(loss);

        int dead = 0;
        for (const auto& p : model->params().params()) {
            REQUIRE(p.var->has_grad());
            bool all_zero = true;
            for (double g : p.var->grad.data) {
                if (g != 0.0) {
                    all_zero = false;
                    break;
                }
            }
            if (all_zero) {
                MESSAGE("zero gradient in ", p.name);
                ++dead;
            }
        }
        CHECK(dead == 0);
    }
}

TEST_CASE("stride-32 decoding confines a pixel perturbation to nearby cells") {
    // resnet50-mini receptive field at stride 32 is 73 px, so on a
    // 160x160 input a corner poke cannot reach the opposite corner's
    // stride-32 cells; with eval-mode batchnorm the untouched region
    // must be bit-identical.
    auto model = build_model(mini_spec(Architecture::fcn32, 160, 160), 29);
    Rng rng(30);
    Tensor base = random_tensor({1, 3, 160, 160}, rng);
    Tensor poked = base;
    for (long c = 0; c < 3; ++c) poked.at4(0, c, 0, 0) += 2.5;

    const Var y0 = model->forward(make_leaf(base, false), false);
    const Var y1 = model->forward(make_leaf(poked, false), false);

    double far_diff = 0.0, near_diff = 0.0;
    for (long cls = 0; cls < 6; ++cls) {
        for (long y = 128; y < 160; ++y) {
            for (long x = 128; x < 160; ++x) {
                far_diff = std::max(far_diff,
                                    std::abs(y0->value.at4(0, cls, y, x) -
                                             y1->value.at4(0, cls, y, x)));
            }
        }
        for (long y = 0; y < 32; ++y) {
            for (long x = 0; x < 32; ++x) {
                near_diff = std::max(near_diff,
                                     std::abs(y0->value.at4(0, cls, y, x) -
                                              y1->value.at4(0, cls, y, x)));
            }
        }
    }
    CHECK(far_diff == 0.0);
    CHECK(near_diff > 0.0);
}

TEST_CASE("pooled encoder exposes five pools with exact provenance") {
    ParamStore store;
    Rng init(5);
    ResidualEncoder enc(store, BackboneConfig::from_identifier("resnet50-mini"),
                        BackboneVariant::pooled, 3, init);
    Rng rng(6);
    const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
    const EncoderTaps taps = enc.forward(x, false);

    REQUIRE(taps.pools.size() == 5);
    CHECK(taps.s4->value.shape == std::vector<long>({1, 32, 16, 16}));
    CHECK(taps.s8->value.shape == std::vector<long>({1, 64, 8, 8}));
    CHECK(taps.s16->value.shape == std::vector<long>({1, 96, 4, 4}));
    CHECK(taps.s32->value.shape == std::vector<long>({1, 128, 2, 2}));

    // The deepest pool consumed the stride-16 tap; unpooling its own
    // output must land every value on that tap's per-window argmax and
    // leave all other positions exactly zero.
    const auto& p5 = taps.pools[4];
    const Var up = max_unpool2x2(p5.out, p5.indices, p5.in_h, p5.in_w);
    const Tensor& src = taps.s16->value;
    long placed = 0;
    for (long c = 0; c < src.dim(1); ++c) {
        for (long oy = 0; oy < 2; ++oy) {
            for (long ox = 0; ox < 2; ++ox) {
                double best = -1e300;
                long best_y = 0, best_x = 0;
                for (long dy = 0; dy < 2; ++dy) {
                    for (long dx = 0; dx < 2; ++dx) {
                        const double v = src.at4(0, c, 2 * oy + dy, 2 * ox + dx);
                        if (v > best) {
                            best = v;
                            best_y = 2 * oy + dy;
                            best_x = 2 * ox + dx;
                        }
                    }
                }
                for (long yy = 2 * oy; yy < 2 * oy + 2; ++yy) {
                    for (long xx = 2 * ox; xx < 2 * ox + 2; ++xx) {
                        const double got = up->value.at4(0, c, yy, xx);
                        if (yy == best_y && xx == best_x) {
                            REQUIRE(got == best);
                            ++placed;
                        } else {
                            REQUIRE(got == 0.0);
                        }
                    }
                }
            }
        }
    }
    CHECK(placed == p5.out->value.numel());

    ParamStore strided_store;
    Rng init2(5);
    ResidualEncoder strided(strided_store, BackboneConfig::from_identifier("resnet50-mini"),
                            BackboneVariant::strided, 3, init2);
    CHECK(strided.forward(x, false).pools.empty());
}

TEST_CASE("a fresh fcn8 computes what fcn32 computes") {
    auto coarse = build_model(mini_spec(Architecture::fcn32), 21);
    auto fine = build_model(mini_spec(Architecture::fcn8), 21);
    Rng rng(22);
    const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
    const Var yc = coarse->forward(x, false);
    const Var yf = fine->forward(x, false);
    // Identical backbones and stride-32 heads by seed; the shallow heads
    // start at zero. Only upsample rounding order differs (x32 in one
    // jump versus x2,x2,x8).
    CHECK(max_abs_diff(yc->value, yf->value) < 1e-9);

    nn::fill(fine->params().find_param("head.score16.weight")->value, 0.05);
    const Var moved = fine->forward(x, false);
    CHECK(max_abs_diff(yc->value, moved->value) > 1e-4);
}

TEST_CASE("zeroing the stride-4 lateral changes the pyramid decoder output") {
    auto model = build_model(mini_spec(Architecture::ragnet), 31);
    Rng rng(32);
    const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
    const Var before = model->forward(x, false);
    nn::fill(model->params().find_param("decoder.lateral4.weight")->value, 0.0);
    nn::fill(model->params().find_param("decoder.lateral4.bias")->value, 0.0);
    const Var after = model->forward(x, false);
    CHECK(max_abs_diff(before->value, after->value) > 1e-6);
}

TEST_CASE("the ablated decoder drops the stride-4 lateral entirely") {
    ModelSpec spec = mini_spec(Architecture::ragnet);
    spec.rag_stride4_lateral = false;
    auto model = build_model(spec, 33);
    CHECK_THROWS(model->params().find_param("decoder.lateral4.weight"));
    Rng rng(34);
    const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
    CHECK(model->forward(x, false)->value.shape == std::vector<long>({1, 6, 64, 64}));
}

TEST_CASE("the exposed encoder handle is the segmentation path's encoder") {
    auto model = build_model(mini_spec(Architecture::ragnet), 35);
    auto handle = model->encoder_handle();
    REQUIRE(handle != nullptr);
    CHECK(handle.get() == model->encoder_handle().get());

    Rng rng(36);
    const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
    const auto tap_before = tensor_digest(handle->forward(x, false).s32->value);
    const auto out_before = tensor_digest(model->forward(x, false)->value);

    // Nudging a backbone weight through the model's store moves both the
    // handle's features and the segmentation output: same objects.
    Var stem = model->params().find_param("encoder.stem.conv.weight");
    for (auto& v : stem->value.data) v += 0.01;
    CHECK(tensor_digest(handle->forward(x, false).s32->value) != tap_before);
    CHECK(tensor_digest(model->forward(x, false)->value) != out_before);
}

TEST_CASE("model spec kv form round-trips and validates") {
    ModelSpec spec = mini_spec(Architecture::pspnet, 96, 64);
    spec.rag_stride4_lateral = false;
    const ModelSpec back = ModelSpec::from_kv(spec.to_kv());
    CHECK(back == spec);

    ModelSpec bad = mini_spec(Architecture::unet);
    bad.input_w = 50;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = mini_spec(Architecture::unet);
    bad.decoder_width = 4;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = mini_spec(Architecture::unet);
    bad.in_channels = 1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = mini_spec(Architecture::unet);
    bad.num_classes = 5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    auto model = build_model(mini_spec(Architecture::unet), 41);
    Rng rng(42);
    // Move off the init point so the test is not vacuous.
    for (auto& v : model->params().find_param("decoder.score.weight")->value.data) {
        v = rng.next_normal();
    }

    Checkpoint ckpt = snapshot_model(*model);
    ckpt.extras.emplace_back("opt.grad_sq.0", random_tensor({3, 2}, rng));
    ckpt.meta.set("epoch", "3");
    ckpt.meta.set("rng_state", "12345");

    const std::string path = "ckpt_roundtrip.bin";
    save_checkpoint(ckpt, path);
    const Checkpoint loaded = load_checkpoint(path);

    CHECK(loaded.spec == ckpt.spec);
    REQUIRE(loaded.params.size() == ckpt.params.size());
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        CHECK(loaded.params[i].first == ckpt.params[i].first);
        CHECK(loaded.params[i].second.data == ckpt.params[i].second.data);
    }
    REQUIRE(loaded.extras.size() == 1);
    CHECK(loaded.extras[0].second.data == ckpt.extras[0].second.data);
    CHECK(loaded.meta.require("epoch") == "3");
    CHECK(loaded.meta.require("rng_state") == "12345");

    auto restored = restore_model(loaded);
    CHECK(restored->params().value_digest() == model->params().value_digest());
    const Var x = make_leaf(random_tensor({1, 3, 64, 64}, rng), false);
    CHECK(tensor_digest(restored->forward(x, false)->value) ==
          tensor_digest(model->forward(x, false)->value));
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loading fails loudly on damage and mismatch") {
    auto model = build_model(mini_spec(Architecture::fcn32), 51);
    const std::string path = "ckpt_damage.bin";
    save_checkpoint(snapshot_model(*model), path);

    SUBCASE("foreign file") {
        std::ofstream(path, std::ios::trunc) << "not a checkpoint\n";
        CHECK_THROWS_WITH_AS(load_checkpoint(path),
                             doctest::Contains("not a version-1 checkpoint"), ValidationError);
    }
    SUBCASE("truncated payload") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 64));
        out.close();
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"),
                             ValidationError);
    }
    SUBCASE("flipped payload byte") {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(-8, std::ios::end);
        const char junk = 0x5A;
        f.write(&junk, 1);
        f.close();
        CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("digest"), ValidationError);
    }
    SUBCASE("spec mismatch on restore") {
        const Checkpoint ckpt = load_checkpoint(path);
        auto other = build_model(mini_spec(Architecture::fcn8), 51);
        CHECK_THROWS_WITH_AS(restore_into(*other, ckpt), doctest::Contains("spec"),
                             ValidationError);
    }
    std::remove(path.c_str());
}

TEST_CASE("pyramid pooling fragment gradcheck") {
    Rng rng(61);
    Var x = make_leaf(kink_free({1, 4, 4, 4}, rng), true);
    std::array<Var, 4> wb;
    for (auto& w : wb) w = make_leaf(random_tensor({2, 4, 1, 1}, rng, 0.5), true);
    Var fuse = make_leaf(random_tensor({2, 12, 3, 3}, rng, 0.3), true);

    auto loss_fn = [&] {
        Var cat = x;
        const std::array<long, 4> bins = {1, 2, 3, 6};
        for (int i = 0; i < 4; ++i) {
            Var g = adaptive_avg_pool(x, bins[static_cast<std::size_t>(i)],
                                      bins[static_cast<std::size_t>(i)]);
            g = relu(conv2d(g, wb[static_cast<std::size_t>(i)], nullptr, 1, 0));
            g = adaptive_avg_pool(g, 4, 4);
            cat = concat_channels(cat, g);
        }
        return half_square_sum(conv2d(cat, fuse, nullptr, 1, 1));
    };
    const auto result = gradcheck(loss_fn, {x, wb[0], wb[1], wb[2], wb[3], fuse});
    CHECK(result.checked > 0);
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("pool-conv-unpool fragment gradcheck") {
    Rng rng(62);
    Var x = make_leaf(random_tensor({1, 2, 6, 6}, rng), true);
    Var w1 = make_leaf(random_tensor({2, 2, 3, 3}, rng, 0.5), true);
    Var w2 = make_leaf(random_tensor({2, 2, 3, 3}, rng, 0.5), true);
    auto loss_fn = [&] {
        auto pooled = maxpool2x2(conv2d(x, w1, nullptr, 1, 1));
        const Var up = max_unpool2x2(pooled.out, pooled.indices, pooled.in_h, pooled.in_w);
        return half_square_sum(conv2d(up, w2, nullptr, 1, 1));
    };
    const auto result = gradcheck(loss_fn, {x, w1, w2});
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("score fusion fragment gradcheck") {
    Rng rng(63);
    Var f8 = make_leaf(random_tensor({1, 3, 4, 4}, rng), true);
    Var f16 = make_leaf(random_tensor({1, 3, 2, 2}, rng), true);
    Var f32 = make_leaf(random_tensor({1, 3, 1, 1}, rng), true);
    Var w8 = make_leaf(random_tensor({2, 3, 1, 1}, rng, 0.5), true);
    Var w16 = make_leaf(random_tensor({2, 3, 1, 1}, rng, 0.5), true);
    Var w32 = make_leaf(random_tensor({2, 3, 1, 1}, rng, 0.5), true);
    auto loss_fn = [&] {
        Var s = conv2d(f32, w32, nullptr, 1, 0);
        s = add(upsample_linear(s, 2), conv2d(f16, w16, nullptr, 1, 0));
        s = add(upsample_linear(s, 2), conv2d(f8, w8, nullptr, 1, 0));
        return half_square_sum(upsample_linear(s, 8));
    };
    const auto result = gradcheck(loss_fn, {f8, f16, f32, w8, w16, w32});
    CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("lateral-merge fragment gradcheck") {
    Rng rng(64);
    Var f8 = make_leaf(kink_free({1, 3, 4, 4}, rng), true);
    Var f16 = make_leaf(kink_free({1, 3, 2, 2}, rng), true);
    Var l8 = make_leaf(random_tensor({2, 3, 1, 1}, rng, 0.5), true);
    Var l16 = make_leaf(random_tensor({2, 3, 1, 1}, rng, 0.5), true);
    Var smooth = make_leaf(random_tensor({2, 2, 3, 3}, rng, 0.5), true);
    auto loss_fn = [&] {
        const Var top = conv2d(f16, l16, nullptr, 1, 0);
        const Var merged = add(upsample_linear(top, 2), conv2d(f8, l8, nullptr, 1, 0));
        return half_square_sum(relu(conv2d(merged, smooth, nullptr, 1, 1)));
    };
    const auto result = gradcheck(loss_fn, {f8, f16, l8, l16, smooth});
    CHECK(result.max_rel_error < 1e-4);
}
