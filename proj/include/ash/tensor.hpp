#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ash/errors.hpp"
#include "ash/rng.hpp"

namespace ash {

// Every array in the pipeline is 4-D (batch, channel, height, width).
// Channel statistics use (B, C, 1, 1); scalars use (1, 1, 1, 1).
struct Shape {
    int b = 1, c = 1, h = 1, w = 1;

    int64_t numel() const {
        return int64_t(b) * c * h * w;
    }
    bool operator==(const Shape& o) const { return b == o.b && c == o.c && h == o.h && w == o.w; }
    bool operator!=(const Shape& o) const { return !(*this == o); }
    std::string str() const;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s) : shape_(s), data_(static_cast<size_t>(s.numel()), 0.0) {}
    Tensor(Shape s, double fill) : shape_(s), data_(static_cast<size_t>(s.numel()), fill) {}

    static Tensor zeros(Shape s) { return Tensor(s); }
    static Tensor full(Shape s, double v) { return Tensor(s, v); }
    static Tensor gaussian(Shape s, Rng& rng, double stddev = 1.0);

    const Shape& shape() const { return shape_; }
    int64_t numel() const { return shape_.numel(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& at(int b, int c, int h, int w) {
        return data_[((static_cast<size_t>(b) * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    double at(int b, int c, int h, int w) const {
        return data_[((static_cast<size_t>(b) * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    bool all_finite() const;
    double abs_max() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

// ---- raw kernels (no autodiff; the graph layer builds on these) ----

// 2-D convolution, zero "same" padding for odd kernels when pad < 0 is passed,
// otherwise the explicit pad. Weight layout (C_out, C_in, kh, kw), bias (C_out).
struct Conv2dSpec {
    int stride = 1;
    int dilation = 1;
    int pad = -1;  // -1 derives same-padding from kernel size and dilation
};

Shape conv2d_out_shape(const Shape& in, const Shape& weight, const Conv2dSpec& spec);
void conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias,
                    const Conv2dSpec& spec, Tensor& out);
void conv2d_backward_input(const Tensor& dout, const Tensor& weight, const Conv2dSpec& spec,
                           Tensor& din);
void conv2d_backward_params(const Tensor& dout, const Tensor& in, const Conv2dSpec& spec,
                            Tensor& dweight, Tensor& dbias);

// Nearest-neighbour 2x upsampling and its adjoint.
void upsample2x_forward(const Tensor& in, Tensor& out);
void upsample2x_backward(const Tensor& dout, Tensor& din);

// Bilinear resampling (half-pixel centers). Forward only; the semantic
// conditioning path treats its input as a constant.
Tensor bilinear_resize(const Tensor& in, int out_h, int out_w);

}  // namespace ash
