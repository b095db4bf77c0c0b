#pragma once

#include <span>
#include <vector>

#include "darnet/tensor.hpp"

namespace darnet::ops {

// Cross-correlation. x: N x C x H x W, weight: O x C x k x k, bias: O.
// Output spatial size floor((H + 2 padding - k) / stride) + 1. Zero padding.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride = 1, int padding = 0);

// 2x2 stride-2 max pooling. Odd sizes are padded by edge replication, so the
// output is ceil(H/2) x ceil(W/2).
template <typename T>
Var<T> maxpool2(const Var<T>& x);

// Each pixel replicated into a 2x2 block.
template <typename T>
Var<T> upsample_nearest2(const Var<T>& x);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> sigmoid(const Var<T>& x);

// Concatenation along the channel axis of two NCHW tensors.
template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

// N x C x H x W -> N x C.
template <typename T>
Var<T> global_avg_pool(const Var<T>& x);

// x: N x F, weight: C x F, bias: C -> N x C.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

// Mean over the batch of -log softmax(logits)[label]. Returns shape [1].
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels);

// Row-wise softmax probabilities (no graph).
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

// alpha (1 - mean SSIM) + (1 - alpha) mean |pred - ref| over a batch of
// N x 3 x H x W images. Returns shape [1].
template <typename T>
Var<T> hybrid_loss(const Var<T>& pred, const Tensor<T>& ref, double alpha);

// sum(x * weights); handy for driving gradients through non-scalar ops.
template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights);

} // namespace darnet::ops
