#include "retseg/nn/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace retseg::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXd;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::runtime_error(message);
}

void require_nchw(const Var& x, const char* op) {
    require(x->value.rank() == 4, std::string(op) + ": expected NCHW input, got " +
                                      x->value.shape_string());
}

// col layout: K = C*kh*kw rows, M = out_h*out_w columns, column-major.
void im2col(const double* x, long channels, long h, long w, long kh, long kw, long stride,
            long pad, long out_h, long out_w, double* col) {
    const long k = channels * kh * kw;
    for (long oy = 0; oy < out_h; ++oy) {
        for (long ox = 0; ox < out_w; ++ox) {
            double* column = col + (oy * out_w + ox) * k;
            long r = 0;
            for (long c = 0; c < channels; ++c) {
                const double* plane = x + c * h * w;
                for (long ky = 0; ky < kh; ++ky) {
                    const long iy = oy * stride - pad + ky;
                    for (long kx = 0; kx < kw; ++kx, ++r) {
                        const long ix = ox * stride - pad + kx;
                        column[r] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                        ? plane[iy * w + ix]
                                        : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const double* col, long channels, long h, long w, long kh, long kw, long stride,
                long pad, long out_h, long out_w, double* dx) {
    const long k = channels * kh * kw;
    for (long oy = 0; oy < out_h; ++oy) {
        for (long ox = 0; ox < out_w; ++ox) {
            const double* column = col + (oy * out_w + ox) * k;
            long r = 0;
            for (long c = 0; c < channels; ++c) {
                double* plane = dx + c * h * w;
                for (long ky = 0; ky < kh; ++ky) {
                    const long iy = oy * stride - pad + ky;
                    for (long kx = 0; kx < kw; ++kx, ++r) {
                        const long ix = ox * stride - pad + kx;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                            plane[iy * w + ix] += column[r];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, long stride, long pad) {
    require_nchw(x, "conv2d");
    require(w->value.rank() == 4, "conv2d: weight must be [outC,inC,kh,kw]");
    const long n = x->value.dim(0), in_c = x->value.dim(1);
    const long h = x->value.dim(2), width = x->value.dim(3);
    const long out_c = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    require(w->value.dim(1) == in_c, "conv2d: channel mismatch, input " +
                                         x->value.shape_string() + " vs weight " +
                                         w->value.shape_string());
    require(stride >= 1, "conv2d: stride must be positive");
    if (b) {
        require(b->value.numel() == out_c, "conv2d: bias size mismatch");
    }
    const long out_h = (h + 2 * pad - kh) / stride + 1;
    const long out_w = (width + 2 * pad - kw) / stride + 1;
    require(out_h >= 1 && out_w >= 1, "conv2d: kernel larger than padded input");

    const long k = in_c * kh * kw;
    const long m = out_h * out_w;
    Tensor out({n, out_c, out_h, out_w});
    std::vector<double> col(static_cast<std::size_t>(k * m));
    Eigen::Map<const RowMat> wm(w->value.data.data(), out_c, k);
    for (long i = 0; i < n; ++i) {
        im2col(x->value.data.data() + i * in_c * h * width, in_c, h, width, kh, kw, stride, pad,
               out_h, out_w, col.data());
        Eigen::Map<const ColMat> cm(col.data(), k, m);
        Eigen::Map<RowMat> om(out.data.data() + i * out_c * m, out_c, m);
        om.noalias() = wm * cm;
    }
    if (b) {
        for (long i = 0; i < n; ++i) {
            for (long c = 0; c < out_c; ++c) {
                double* plane = out.data.data() + (i * out_c + c) * m;
                const double bias = b->value[c];
                for (long j = 0; j < m; ++j) plane[j] += bias;
            }
        }
    }

    std::vector<Var> inputs = b ? std::vector<Var>{x, w, b} : std::vector<Var>{x, w};
    return make_node(std::move(out), std::move(inputs),
                     [n, in_c, h, width, out_c, kh, kw, stride, pad, out_h, out_w](Node& node) {
                         const Var& xin = node.inputs[0];
                         const Var& win = node.inputs[1];
                         const long k = in_c * kh * kw;
                         const long m = out_h * out_w;
                         std::vector<double> col(static_cast<std::size_t>(k * m));
                         std::vector<double> dcol(static_cast<std::size_t>(k * m));
                         Eigen::Map<const RowMat> wm(win->value.data.data(), out_c, k);
                         const bool need_dx = xin->requires_grad;
                         const bool need_dw = win->requires_grad;
                         if (need_dx) xin->ensure_grad();
                         if (need_dw) win->ensure_grad();
                         for (long i = 0; i < n; ++i) {
                             Eigen::Map<const RowMat> gm(node.grad.data.data() + i * out_c * m,
                                                         out_c, m);
                             if (need_dw) {
                                 im2col(xin->value.data.data() + i * in_c * h * width, in_c, h,
                                        width, kh, kw, stride, pad, out_h, out_w, col.data());
                                 Eigen::Map<const ColMat> cm(col.data(), k, m);
                                 Eigen::Map<RowMat> dwm(win->grad.data.data(), out_c, k);
                                 dwm.noalias() += gm * cm.transpose();
                             }
                             if (need_dx) {
                                 Eigen::Map<ColMat> dcm(dcol.data(), k, m);
                                 dcm.noalias() = wm.transpose() * gm;
                                 col2im_add(dcol.data(), in_c, h, width, kh, kw, stride, pad,
                                            out_h, out_w,
                                            xin->grad.data.data() + i * in_c * h * width);
                             }
                         }
                         if (node.inputs.size() == 3 && node.inputs[2]->requires_grad) {
                             const Var& bin = node.inputs[2];
                             bin->ensure_grad();
                             for (long i = 0; i < n; ++i) {
                                 for (long c = 0; c < out_c; ++c) {
                                     const double* plane =
                                         node.grad.data.data() + (i * out_c + c) * m;
                                     double s = 0.0;
                                     for (long j = 0; j < m; ++j) s += plane[j];
                                     bin->grad[c] += s;
                                 }
                             }
                         }
                     });
}

Var relu(const Var& x) {
    Tensor out = x->value;
    for (auto& v : out.data) {
        if (v < 0.0) v = 0.0;
    }
    return make_node(std::move(out), {x}, [](Node& node) {
        const Var& xin = node.inputs[0];
        if (!xin->requires_grad) return;
        Tensor& dx = xin->ensure_grad();
        for (long i = 0; i < node.grad.numel(); ++i) {
            if (xin->value[i] > 0.0) dx[i] += node.grad[i];
        }
    });
}

Var add(const Var& a, const Var& b) {
    require(a->value.same_shape(b->value), "add: shape mismatch " + a->value.shape_string() +
                                               " vs " + b->value.shape_string());
    Tensor out = a->value;
    for (long i = 0; i < out.numel(); ++i) out[i] += b->value[i];
    return make_node(std::move(out), {a, b}, [](Node& node) {
        for (const auto& in : node.inputs) {
            if (!in->requires_grad) continue;
            Tensor& g = in->ensure_grad();
            for (long i = 0; i < node.grad.numel(); ++i) g[i] += node.grad[i];
        }
    });
}

Var concat_channels(const Var& a, const Var& b) {
    require_nchw(a, "concat");
    require_nchw(b, "concat");
    require(a->value.dim(0) == b->value.dim(0) && a->value.dim(2) == b->value.dim(2) &&
                a->value.dim(3) == b->value.dim(3),
            "concat: non-channel dims differ, " + a->value.shape_string() + " vs " +
                b->value.shape_string());
    const long n = a->value.dim(0), ca = a->value.dim(1), cb = b->value.dim(1);
    const long hw = a->value.dim(2) * a->value.dim(3);
    Tensor out({n, ca + cb, a->value.dim(2), a->value.dim(3)});
    for (long i = 0; i < n; ++i) {
        std::copy_n(a->value.data.data() + i * ca * hw, ca * hw,
                    out.data.data() + i * (ca + cb) * hw);
        std::copy_n(b->value.data.data() + i * cb * hw, cb * hw,
                    out.data.data() + i * (ca + cb) * hw + ca * hw);
    }
    return make_node(std::move(out), {a, b}, [n, ca, cb, hw](Node& node) {
        const Var& a_in = node.inputs[0];
        const Var& b_in = node.inputs[1];
        for (long i = 0; i < n; ++i) {
            const double* g = node.grad.data.data() + i * (ca + cb) * hw;
            if (a_in->requires_grad) {
                double* da = a_in->ensure_grad().data.data() + i * ca * hw;
                for (long j = 0; j < ca * hw; ++j) da[j] += g[j];
            }
            if (b_in->requires_grad) {
                double* db = b_in->ensure_grad().data.data() + i * cb * hw;
                for (long j = 0; j < cb * hw; ++j) db[j] += g[ca * hw + j];
            }
        }
    });
}

PoolResult maxpool2x2(const Var& x) {
    require_nchw(x, "maxpool2x2");
    const long n = x->value.dim(0), c = x->value.dim(1);
    const long h = x->value.dim(2), w = x->value.dim(3);
    require(h % 2 == 0 && w % 2 == 0,
            "maxpool2x2: spatial dims must be even, got " + x->value.shape_string());
    const long oh = h / 2, ow = w / 2;
    Tensor out({n, c, oh, ow});
    auto indices = std::make_shared<std::vector<long>>(static_cast<std::size_t>(n * c * oh * ow));
    for (long i = 0; i < n; ++i) {
        for (long ch = 0; ch < c; ++ch) {
            const double* plane = x->value.data.data() + (i * c + ch) * h * w;
            double* oplane = out.data.data() + (i * c + ch) * oh * ow;
            long* iplane = indices->data() + (i * c + ch) * oh * ow;
            for (long oy = 0; oy < oh; ++oy) {
                for (long ox = 0; ox < ow; ++ox) {
                    long best = (2 * oy) * w + 2 * ox;
                    double best_v = plane[best];
                    for (long dy = 0; dy < 2; ++dy) {
                        for (long dx = 0; dx < 2; ++dx) {
                            const long idx = (2 * oy + dy) * w + 2 * ox + dx;
                            if (plane[idx] > best_v) {
                                best_v = plane[idx];
                                best = idx;
                            }
                        }
                    }
                    oplane[oy * ow + ox] = best_v;
                    iplane[oy * ow + ox] = best;
                }
            }
        }
    }
    PoolResult result;
    result.in_h = h;
    result.in_w = w;
    result.indices = indices;
    result.out = make_node(std::move(out), {x}, [n, c, h, w, oh, ow, indices](Node& node) {
        const Var& xin = node.inputs[0];
        if (!xin->requires_grad) return;
        Tensor& dx = xin->ensure_grad();
        for (long i = 0; i < n; ++i) {
            for (long ch = 0; ch < c; ++ch) {
                const double* g = node.grad.data.data() + (i * c + ch) * oh * ow;
                const long* iplane = indices->data() + (i * c + ch) * oh * ow;
                double* dplane = dx.data.data() + (i * c + ch) * h * w;
                for (long j = 0; j < oh * ow; ++j) dplane[iplane[j]] += g[j];
            }
        }
    });
    return result;
}

Var max_unpool2x2(const Var& x, const std::shared_ptr<std::vector<long>>& indices, long out_h,
                  long out_w) {
    require_nchw(x, "max_unpool2x2");
    const long n = x->value.dim(0), c = x->value.dim(1);
    const long h = x->value.dim(2), w = x->value.dim(3);
    require(out_h == 2 * h && out_w == 2 * w,
            "max_unpool2x2: target size must be exactly 2x the input");
    require(indices && static_cast<long>(indices->size()) == x->value.numel(),
            "max_unpool2x2: index map does not match input");
    for (long i = 0; i < n; ++i) {
        for (long ch = 0; ch < c; ++ch) {
            const long* iplane = indices->data() + (i * c + ch) * h * w;
            for (long oy = 0; oy < h; ++oy) {
                for (long ox = 0; ox < w; ++ox) {
                    const long idx = iplane[oy * w + ox];
                    const long iy = idx / out_w, ix = idx % out_w;
                    require(iy >= 2 * oy && iy <= 2 * oy + 1 && ix >= 2 * ox && ix <= 2 * ox + 1,
                            "max_unpool2x2: index out of its 2x2 window");
                }
            }
        }
    }
    Tensor out({n, c, out_h, out_w});
    for (long i = 0; i < n; ++i) {
        for (long ch = 0; ch < c; ++ch) {
            const double* plane = x->value.data.data() + (i * c + ch) * h * w;
            const long* iplane = indices->data() + (i * c + ch) * h * w;
            double* oplane = out.data.data() + (i * c + ch) * out_h * out_w;
            for (long j = 0; j < h * w; ++j) oplane[iplane[j]] = plane[j];
        }
    }
    return make_node(std::move(out), {x}, [n, c, h, w, out_h, out_w, indices](Node& node) {
        const Var& xin = node.inputs[0];
        if (!xin->requires_grad) return;
        Tensor& dx = xin->ensure_grad();
        for (long i = 0; i < n; ++i) {
            for (long ch = 0; ch < c; ++ch) {
                const double* g = node.grad.data.data() + (i * c + ch) * out_h * out_w;
                const long* iplane = indices->data() + (i * c + ch) * h * w;
                double* dplane = dx.data.data() + (i * c + ch) * h * w;
                for (long j = 0; j < h * w; ++j) dplane[j] += g[iplane[j]];
            }
        }
    });
}

Var adaptive_avg_pool(const Var& x, long out_h, long out_w) {
    require_nchw(x, "adaptive_avg_pool");
    require(out_h >= 1 && out_w >= 1, "adaptive_avg_pool: output size must be positive");
    const long n = x->value.dim(0), c = x->value.dim(1);
    const long h = x->value.dim(2), w = x->value.dim(3);
    auto win = [](long i, long in, long out, long& lo, long& hi) {
        lo = (i * in) / out;
        hi = ((i + 1) * in + out - 1) / out;
    };
    Tensor out({n, c, out_h, out_w});
    for (long i = 0; i < n; ++i) {
        for (long ch = 0; ch < c; ++ch) {
            const double* plane = x->value.data.data() + (i * c + ch) * h * w;
            double* oplane = out.data.data() + (i * c + ch) * out_h * out_w;
            for (long oy = 0; oy < out_h; ++oy) {
                long y0, y1;
                win(oy, h, out_h, y0, y1);
                for (long ox = 0; ox < out_w; ++ox) {
                    long x0, x1;
                    win(ox, w, out_w, x0, x1);
                    double s = 0.0;
                    for (long y = y0; y < y1; ++y) {
                        for (long xx = x0; xx < x1; ++xx) s += plane[y * w + xx];
                    }
                    oplane[oy * out_w + ox] = s / static_cast<double>((y1 - y0) * (x1 - x0));
                }
            }
        }
    }
    return make_node(std::move(out), {x}, [n, c, h, w, out_h, out_w, win](Node& node) {
        const Var& xin = node.inputs[0];
        if (!xin->requires_grad) return;
        Tensor& dx = xin->ensure_grad();
        for (long i = 0; i < n; ++i) {
            for (long ch = 0; ch < c; ++ch) {
                const double* g = node.grad.data.data() + (i * c + ch) * out_h * out_w;
                double* dplane = dx.data.data() + (i * c + ch) * h * w;
                for (long oy = 0; oy < out_h; ++oy) {
                    long y0, y1;
                    win(oy, h, out_h, y0, y1);
                    for (long ox = 0; ox < out_w; ++ox) {
                        long x0, x1;
                        win(ox, w, out_w, x0, x1);
                        const double share = g[oy * out_w + ox] /
                                             static_cast<double>((y1 - y0) * (x1 - x0));
                        for (long y = y0; y < y1; ++y) {
                            for (long xx = x0; xx < x1; ++xx) dplane[y * w + xx] += share;
                        }
                    }
                }
            }
        }
    });
}

Var upsample_linear(const Var& x, long factor) {
    require_nchw(x, "upsample_linear");
    require(factor >= 1, "upsample_linear: factor must be >= 1");
    const long n = x->value.dim(0), c = x->value.dim(1);
    const long h = x->value.dim(2), w = x->value.dim(3);
    const long oh = h * factor, ow = w * factor;
    const double f = static_cast<double>(factor);
    Tensor out({n, c, oh, ow});
    for (long i = 0; i < n; ++i) {
        for (long ch = 0; ch < c; ++ch) {
            const double* plane = x->value.data.data() + (i * c + ch) * h * w;
            double* oplane = out.data.data() + (i * c + ch) * oh * ow;
            for (long oy = 0; oy < oh; ++oy) {
                const long y0 = oy / factor;
                const long y1 = std::min(y0 + 1, h - 1);
                const double ty = static_cast<double>(oy % factor) / f;
                for (long ox = 0; ox < ow; ++ox) {
                    const long x0 = ox / factor;
                    const long x1 = std::min(x0 + 1, w - 1);
                    const double tx = static_cast<double>(ox % factor) / f;
                    oplane[oy * ow + ox] = (1.0 - ty) * (1.0 - tx) * plane[y0 * w + x0] +
                                           (1.0 - ty) * tx * plane[y0 * w + x1] +
                                           ty * (1.0 - tx) * plane[y1 * w + x0] +
                                           ty * tx * plane[y1 * w + x1];
                }
            }
        }
    }
    return make_node(std::move(out), {x}, [n, c, h, w, oh, ow, factor, f](Node& node) {
        const Var& xin = node.inputs[0];
        if (!xin->requires_grad) return;
        Tensor& dx = xin->ensure_grad();
        for (long i = 0; i < n; ++i) {
            for (long ch = 0; ch < c; ++ch) {
                const double* g = node.grad.data.data() + (i * c + ch) * oh * ow;
                double* dplane = dx.data.data() + (i * c + ch) * h * w;
                for (long oy = 0; oy < oh; ++oy) {
                    const long y0 = oy / factor;
                    const long y1 = std::min(y0 + 1, h - 1);
                    const double ty = static_cast<double>(oy % factor) / f;
                    for (long ox = 0; ox < ow; ++ox) {
                        const long x0 = ox / factor;
                        const long x1 = std::min(x0 + 1, w - 1);
                        const double tx = static_cast<double>(ox % factor) / f;
                        const double gv = g[oy * ow + ox];
                        dplane[y0 * w + x0] += (1.0 - ty) * (1.0 - tx) * gv;
                        dplane[y0 * w + x1] += (1.0 - ty) * tx * gv;
                        dplane[y1 * w + x0] += ty * (1.0 - tx) * gv;
                        dplane[y1 * w + x1] += ty * tx * gv;
                    }
                }
            }
        }
    });
}

Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                Tensor& running_var, bool training, double momentum, double eps) {
    require_nchw(x, "batchnorm2d");
    const long n = x->value.dim(0), c = x->value.dim(1);
    const long hw = x->value.dim(2) * x->value.dim(3);
    require(gamma->value.numel() == c && beta->value.numel() == c,
            "batchnorm2d: affine parameter size mismatch");
    require(running_mean.numel() == c && running_var.numel() == c,
            "batchnorm2d: running buffer size mismatch");

    std::vector<double> mean(static_cast<std::size_t>(c));
    std::vector<double> var(static_cast<std::size_t>(c));
    if (training) {
        const double count = static_cast<double>(n * hw);
        for (long ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (long i = 0; i < n; ++i) {
                const double* plane = x->value.data.data() + (i * c + ch) * hw;
                for (long j = 0; j < hw; ++j) s += plane[j];
            }
            const double mu = s / count;
            double v = 0.0;
            for (long i = 0; i < n; ++i) {
                const double* plane = x->value.data.data() + (i * c + ch) * hw;
                for (long j = 0; j < hw; ++j) {
                    const double d = plane[j] - mu;
                    v += d * d;
                }
            }
            mean[static_cast<std::size_t>(ch)] = mu;
            var[static_cast<std::size_t>(ch)] = v / count;
            running_mean[ch] = (1.0 - momentum) * running_mean[ch] + momentum * mu;
            running_var[ch] = (1.0 - momentum) * running_var[ch] +
                              momentum * var[static_cast<std::size_t>(ch)];
        }
    } else {
        for (long ch = 0; ch < c; ++ch) {
            mean[static_cast<std::size_t>(ch)] = running_mean[ch];
            var[static_cast<std::size_t>(ch)] = running_var[ch];
        }
    }

    Tensor out(x->value.shape);
    // Normalized activations, kept for the backward pass.
    auto xhat = std::make_shared<std::vector<double>>(x->value.data.size());
    for (long ch = 0; ch < c; ++ch) {
        const double inv = 1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + eps);
        const double mu = mean[static_cast<std::size_t>(ch)];
        const double g = gamma->value[ch];
        const double b = beta->value[ch];
        for (long i = 0; i < n; ++i) {
            const double* plane = x->value.data.data() + (i * c + ch) * hw;
            double* oplane = out.data.data() + (i * c + ch) * hw;
            double* hplane = xhat->data() + (i * c + ch) * hw;
            for (long j = 0; j < hw; ++j) {
                const double h = (plane[j] - mu) * inv;
                hplane[j] = h;
                oplane[j] = g * h + b;
            }
        }
    }

    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(c));
    for (long ch = 0; ch < c; ++ch) {
        (*inv_std)[static_cast<std::size_t>(ch)] =
            1.0 / std::sqrt(var[static_cast<std::size_t>(ch)] + eps);
    }

    return make_node(std::move(out), {x, gamma, beta},
                     [n, c, hw, training, xhat, inv_std](Node& node) {
                         const Var& xin = node.inputs[0];
                         const Var& gin = node.inputs[1];
                         const Var& bin = node.inputs[2];
                         const double count = static_cast<double>(n * hw);
                         for (long ch = 0; ch < c; ++ch) {
                             double sum_g = 0.0;
                             double sum_gh = 0.0;
                             for (long i = 0; i < n; ++i) {
                                 const double* g = node.grad.data.data() + (i * c + ch) * hw;
                                 const double* hpl = xhat->data() + (i * c + ch) * hw;
                                 for (long j = 0; j < hw; ++j) {
                                     sum_g += g[j];
                                     sum_gh += g[j] * hpl[j];
                                 }
                             }
                             if (gin->requires_grad) gin->ensure_grad()[ch] += sum_gh;
                             if (bin->requires_grad) bin->ensure_grad()[ch] += sum_g;
                             if (!xin->requires_grad) continue;
                             Tensor& dx = xin->ensure_grad();
                             const double gamma_v = gin->value[ch];
                             const double inv = (*inv_std)[static_cast<std::size_t>(ch)];
                             for (long i = 0; i < n; ++i) {
                                 const double* g = node.grad.data.data() + (i * c + ch) * hw;
                                 const double* hpl = xhat->data() + (i * c + ch) * hw;
                                 double* dpl = dx.data.data() + (i * c + ch) * hw;
                                 if (training) {
                                     for (long j = 0; j < hw; ++j) {
                                         dpl[j] += gamma_v * inv *
                                                   (g[j] - sum_g / count -
                                                    hpl[j] * sum_gh / count);
                                     }
                                 } else {
                                     for (long j = 0; j < hw; ++j) {
                                         dpl[j] += gamma_v * inv * g[j];
                                     }
                                 }
                             }
                         }
                     });
}

Var softmax_cross_entropy(const Var& logits, const Tensor& labels,
                          const std::vector<double>& class_weights) {
    require_nchw(logits, "softmax_cross_entropy");
    const long n = logits->value.dim(0), c = logits->value.dim(1);
    const long h = logits->value.dim(2), w = logits->value.dim(3);
    require(labels.rank() == 3 && labels.dim(0) == n && labels.dim(1) == h && labels.dim(2) == w,
            "softmax_cross_entropy: labels must be [N,H,W] matching logits");
    require(class_weights.empty() || static_cast<long>(class_weights.size()) == c,
            "softmax_cross_entropy: one weight per class required");

    const long hw = h * w;
    // softmax probabilities, kept for the backward pass
    auto probs = std::make_shared<std::vector<double>>(logits->value.data.size());
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < hw; ++j) {
            double max_v = -1e300;
            for (long ch = 0; ch < c; ++ch) {
                max_v = std::max(max_v, logits->value[(i * c + ch) * hw + j]);
            }
            double denom = 0.0;
            for (long ch = 0; ch < c; ++ch) {
                denom += std::exp(logits->value[(i * c + ch) * hw + j] - max_v);
            }
            const long label = static_cast<long>(labels[i * hw + j]);
            require(label >= 0 && label < c, "softmax_cross_entropy: label " +
                                                 std::to_string(label) + " out of range");
            const double weight =
                class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(label)];
            for (long ch = 0; ch < c; ++ch) {
                (*probs)[(i * c + ch) * hw + j] =
                    std::exp(logits->value[(i * c + ch) * hw + j] - max_v) / denom;
            }
            const double logp =
                logits->value[(i * c + label) * hw + j] - max_v - std::log(denom);
            loss_sum -= weight * logp;
            weight_sum += weight;
        }
    }
    require(weight_sum > 0.0, "softmax_cross_entropy: zero total weight");
    Tensor out({1});
    out[0] = loss_sum / weight_sum;

    Tensor labels_copy = labels;
    return make_node(std::move(out), {logits},
                     [n, c, hw, probs, labels_copy, class_weights, weight_sum](Node& node) {
                         const Var& lin = node.inputs[0];
                         if (!lin->requires_grad) return;
                         Tensor& dx = lin->ensure_grad();
                         const double upstream = node.grad[0];
                         for (long i = 0; i < n; ++i) {
                             for (long j = 0; j < hw; ++j) {
                                 const long label = static_cast<long>(labels_copy[i * hw + j]);
                                 const double weight =
                                     class_weights.empty()
                                         ? 1.0
                                         : class_weights[static_cast<std::size_t>(label)];
                                 const double scale = upstream * weight / weight_sum;
                                 for (long ch = 0; ch < c; ++ch) {
                                     const double p = (*probs)[(i * c + ch) * hw + j];
                                     const double target = ch == label ? 1.0 : 0.0;
                                     dx[(i * c + ch) * hw + j] += scale * (p - target);
                                 }
                             }
                         }
                     });
}

MaskImage argmax_mask(const Tensor& scores, long sample) {
    if (scores.rank() != 4) throw std::runtime_error("argmax_mask: expected NCHW scores");
    const long c = scores.dim(1), h = scores.dim(2), w = scores.dim(3);
    if (sample < 0 || sample >= scores.dim(0)) {
        throw std::runtime_error("argmax_mask: sample index out of range");
    }
    MaskImage mask(static_cast<int>(w), static_cast<int>(h));
    const long hw = h * w;
    for (long j = 0; j < hw; ++j) {
        long best = 0;
        double best_v = scores[(sample * c) * hw + j];
        for (long ch = 1; ch < c; ++ch) {
            const double v = scores[(sample * c + ch) * hw + j];
            if (v > best_v) {
                best_v = v;
                best = ch;
            }
        }
        mask.labels[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(best);
    }
    return mask;
}

}  // namespace retseg::nn
