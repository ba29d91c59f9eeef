#include "ash/tensor.hpp"

#include <cmath>
#include <cstdio>

namespace ash {

std::string Shape::str() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "(%d,%d,%d,%d)", b, c, h, w);
    return buf;
}

Tensor Tensor::gaussian(Shape s, Rng& rng, double stddev) {
    Tensor t(s);
    for (int64_t i = 0; i < t.numel(); ++i) t.data_[static_cast<size_t>(i)] = rng.gaussian() * stddev;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::abs_max() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

static int same_pad(const Shape& weight, const Conv2dSpec& spec) {
    if (spec.pad >= 0) return spec.pad;
    return (weight.h - 1) * spec.dilation / 2;
}

Shape conv2d_out_shape(const Shape& in, const Shape& weight, const Conv2dSpec& spec) {
    if (in.c != weight.c)
        throw ShapeError("conv2d: input channels " + in.str() + " vs weight " + weight.str());
    const int pad = same_pad(weight, spec);
    const int eff_h = (weight.h - 1) * spec.dilation + 1;
    const int eff_w = (weight.w - 1) * spec.dilation + 1;
    const int oh = (in.h + 2 * pad - eff_h) / spec.stride + 1;
    const int ow = (in.w + 2 * pad - eff_w) / spec.stride + 1;
    if (oh < 1 || ow < 1) throw ShapeError("conv2d: output would be empty for input " + in.str());
    return Shape{in.b, weight.b, oh, ow};
}

void conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias,
                    const Conv2dSpec& spec, Tensor& out) {
    const Shape is = in.shape(), ws = weight.shape(), os = out.shape();
    const int pad = same_pad(ws, spec);
    const int stride = spec.stride, dil = spec.dilation;

    // One thread owns each (b, co) output plane: accumulation order is fixed,
    // so results are bitwise identical regardless of thread count.
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < is.b; ++b) {
        for (int co = 0; co < ws.b; ++co) {
            double* op = &out.at(b, co, 0, 0);
            const double bv = bias[static_cast<size_t>(co)];
            for (int i = 0; i < os.h * os.w; ++i) op[i] = bv;
            for (int ci = 0; ci < ws.c; ++ci) {
                const double* ip = &in.at(b, ci, 0, 0);
                for (int kh = 0; kh < ws.h; ++kh) {
                    for (int kw = 0; kw < ws.w; ++kw) {
                        const double wv = weight.at(co, ci, kh, kw);
                        if (wv == 0.0) continue;
                        for (int oh = 0; oh < os.h; ++oh) {
                            const int ih = oh * stride - pad + kh * dil;
                            if (ih < 0 || ih >= is.h) continue;
                            double* orow = op + oh * os.w;
                            const double* irow = ip + ih * is.w;
                            for (int ow = 0; ow < os.w; ++ow) {
                                const int iw = ow * stride - pad + kw * dil;
                                if (iw < 0 || iw >= is.w) continue;
                                orow[ow] += wv * irow[iw];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const Tensor& dout, const Tensor& weight, const Conv2dSpec& spec,
                           Tensor& din) {
    const Shape is = din.shape(), ws = weight.shape(), os = dout.shape();
    const int pad = same_pad(ws, spec);
    const int stride = spec.stride, dil = spec.dilation;

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < is.b; ++b) {
        for (int ci = 0; ci < is.c; ++ci) {
            double* dp = &din.at(b, ci, 0, 0);
            for (int co = 0; co < ws.b; ++co) {
                const double* gp = &dout.at(b, co, 0, 0);
                for (int kh = 0; kh < ws.h; ++kh) {
                    for (int kw = 0; kw < ws.w; ++kw) {
                        const double wv = weight.at(co, ci, kh, kw);
                        if (wv == 0.0) continue;
                        for (int oh = 0; oh < os.h; ++oh) {
                            const int ih = oh * stride - pad + kh * dil;
                            if (ih < 0 || ih >= is.h) continue;
                            double* drow = dp + ih * is.w;
                            const double* grow = gp + oh * os.w;
                            for (int ow = 0; ow < os.w; ++ow) {
                                const int iw = ow * stride - pad + kw * dil;
                                if (iw < 0 || iw >= is.w) continue;
                                drow[iw] += wv * grow[ow];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_params(const Tensor& dout, const Tensor& in, const Conv2dSpec& spec,
                            Tensor& dweight, Tensor& dbias) {
    const Shape is = in.shape(), ws = dweight.shape(), os = dout.shape();
    const int pad = same_pad(ws, spec);
    const int stride = spec.stride, dil = spec.dilation;

#pragma omp parallel for schedule(static)
    for (int co = 0; co < ws.b; ++co) {
        double bsum = 0.0;
        for (int b = 0; b < is.b; ++b) {
            const double* gp = &dout.at(b, co, 0, 0);
            for (int i = 0; i < os.h * os.w; ++i) bsum += gp[i];
            for (int ci = 0; ci < ws.c; ++ci) {
                const double* ip = &in.at(b, ci, 0, 0);
                for (int kh = 0; kh < ws.h; ++kh) {
                    for (int kw = 0; kw < ws.w; ++kw) {
                        double acc = 0.0;
                        for (int oh = 0; oh < os.h; ++oh) {
                            const int ih = oh * stride - pad + kh * dil;
                            if (ih < 0 || ih >= is.h) continue;
                            const double* irow = ip + ih * is.w;
                            const double* grow = gp + oh * os.w;
                            for (int ow = 0; ow < os.w; ++ow) {
                                const int iw = ow * stride - pad + kw * dil;
                                if (iw < 0 || iw >= is.w) continue;
                                acc += grow[ow] * irow[iw];
                            }
                        }
                        dweight.at(co, ci, kh, kw) += acc;
                    }
                }
            }
        }
        dbias[static_cast<size_t>(co)] += bsum;
    }
}

void upsample2x_forward(const Tensor& in, Tensor& out) {
    const Shape is = in.shape();
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < is.b; ++b) {
        for (int c = 0; c < is.c; ++c) {
            for (int h = 0; h < is.h; ++h) {
                for (int w = 0; w < is.w; ++w) {
                    const double v = in.at(b, c, h, w);
                    out.at(b, c, 2 * h, 2 * w) = v;
                    out.at(b, c, 2 * h, 2 * w + 1) = v;
                    out.at(b, c, 2 * h + 1, 2 * w) = v;
                    out.at(b, c, 2 * h + 1, 2 * w + 1) = v;
                }
            }
        }
    }
}

void upsample2x_backward(const Tensor& dout, Tensor& din) {
    const Shape is = din.shape();
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < is.b; ++b) {
        for (int c = 0; c < is.c; ++c) {
            for (int h = 0; h < is.h; ++h) {
                for (int w = 0; w < is.w; ++w) {
                    din.at(b, c, h, w) += dout.at(b, c, 2 * h, 2 * w) +
                                          dout.at(b, c, 2 * h, 2 * w + 1) +
                                          dout.at(b, c, 2 * h + 1, 2 * w) +
                                          dout.at(b, c, 2 * h + 1, 2 * w + 1);
                }
            }
        }
    }
}

Tensor bilinear_resize(const Tensor& in, int out_h, int out_w) {
    const Shape is = in.shape();
    Tensor out(Shape{is.b, is.c, out_h, out_w});
    if (out_h == is.h && out_w == is.w) {
        for (int64_t i = 0; i < in.numel(); ++i) out[static_cast<size_t>(i)] = in[static_cast<size_t>(i)];
        return out;
    }
    const double sh = static_cast<double>(is.h) / out_h;
    const double sw = static_cast<double>(is.w) / out_w;
    for (int b = 0; b < is.b; ++b) {
        for (int c = 0; c < is.c; ++c) {
            for (int oh = 0; oh < out_h; ++oh) {
                double fy = (oh + 0.5) * sh - 0.5;
                fy = std::min(std::max(fy, 0.0), static_cast<double>(is.h - 1));
                const int y0 = static_cast<int>(fy);
                const int y1 = std::min(y0 + 1, is.h - 1);
                const double wy = fy - y0;
                for (int ow = 0; ow < out_w; ++ow) {
                    double fx = (ow + 0.5) * sw - 0.5;
                    fx = std::min(std::max(fx, 0.0), static_cast<double>(is.w - 1));
                    const int x0 = static_cast<int>(fx);
                    const int x1 = std::min(x0 + 1, is.w - 1);
                    const double wx = fx - x0;
                    out.at(b, c, oh, ow) =
                        (1 - wy) * ((1 - wx) * in.at(b, c, y0, x0) + wx * in.at(b, c, y0, x1)) +
                        wy * ((1 - wx) * in.at(b, c, y1, x0) + wx * in.at(b, c, y1, x1));
                }
            }
        }
    }
    return out;
}

}  // namespace ash
