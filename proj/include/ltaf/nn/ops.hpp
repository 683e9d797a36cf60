#pragma once

#include "ltaf/nn/graph.hpp"

namespace ltaf::nn {

// x: [N,Cin,H,W], weight: [Cout,Cin,k,k], bias: [Cout].
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

// x: [N,D], weight: [O,D], bias: [O].
Var linear(const Var& x, const Var& weight, const Var& bias);

// Per-sample normalization over channel groups with per-channel affine.
Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, float eps = 1e-5f);

Var silu(const Var& x);
Var sigmoid(const Var& x);
Var add(const Var& a, const Var& b);
Var scale(const Var& x, float factor);

// x: [N,C,H,W] plus a per-sample, per-channel offset v: [N,C].
Var add_channel_bias(const Var& x, const Var& v);

Var concat_channels(const Var& a, const Var& b);
Var slice_channels(const Var& x, int begin, int count);
Var upsample_nearest2x(const Var& x);

// mean + exp(logvar / 2) * noise with logvar clamped to [-30, 20].
Var gaussian_sample(const Var& mean, const Var& logvar, const Tensor& noise);

// KL(N(mean, exp(logvar)) || N(0, I)) summed over elements, averaged over the batch.
Var kl_standard_normal(const Var& mean, const Var& logvar);

// Scalar mean of squared differences.
Var mse_loss(const Var& prediction, const Var& target);

}  // namespace ltaf::nn
