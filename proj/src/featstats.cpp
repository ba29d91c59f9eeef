#include "ash/featstats.hpp"

namespace ash {

ChannelStats channel_stats(const Tensor& f) {
    if (!f.all_finite()) throw InvalidInputError("channel_stats: non-finite entries");
    Var v = constant(f);
    return ChannelStats{mean_hw(v)->value, std_hw(v, kStdEps)->value};
}

Var adain(const Var& f_src, const Var& f_style_like) {
    const Shape a = f_src->shape(), b = f_style_like->shape();
    if (a.b != b.b || a.c != b.c)
        throw ShapeError("adain: (B,C) mismatch " + a.str() + " vs " + b.str());
    Var normalized = divide(sub(f_src, mean_hw(f_src)), std_hw(f_src, kStdEps));
    return add(mul(normalized, std_hw(f_style_like, kStdEps)), mean_hw(f_style_like));
}

Tensor adain(const Tensor& f_src, const Tensor& f_style_like) {
    return adain(constant(f_src), constant(f_style_like))->value;
}

Var content_loss(const Var& f_src, const Var& merged) {
    if (f_src->shape() != merged->shape())
        throw ShapeError("content_loss: " + f_src->shape().str() + " vs " + merged->shape().str());
    return l2_norm(sub(f_src, merged));
}

double content_loss(const Tensor& f_src, const Tensor& merged) {
    return scalar_value(content_loss(constant(f_src), constant(merged)));
}

}  // namespace ash
