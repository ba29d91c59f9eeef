#pragma once

#include "ash/autograd.hpp"
#include "ash/tensor.hpp"

namespace ash {

// Floor applied to every channel standard deviation. Keeps the AdaIN
// division finite on constant channels without disturbing ordinary features.
inline constexpr double kStdEps = 1e-5;

// Per-(batch, channel) statistics over the spatial extent, stored (B, C, 1, 1).
struct ChannelStats {
    Tensor mean;
    Tensor std;
};

// Population statistics; std floored at kStdEps. Throws InvalidInputError on
// non-finite entries.
ChannelStats channel_stats(const Tensor& f);

// Differentiable statistics for graph paths (no finiteness scan).
inline Var mean_channels(const Var& f) { return mean_hw(f); }
inline Var std_channels(const Var& f) { return std_hw(f, kStdEps); }

// Re-normalizes f_src channel-wise to the style statistics. Spatial sizes may
// differ; (B, C) must match.
Var adain(const Var& f_src, const Var& f_style_like);
Tensor adain(const Tensor& f_src, const Tensor& f_style_like);

// Euclidean norm of the elementwise difference (latent content distance).
Var content_loss(const Var& f_src, const Var& merged);
double content_loss(const Tensor& f_src, const Tensor& merged);

}  // namespace ash
