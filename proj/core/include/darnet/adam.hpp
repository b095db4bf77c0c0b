#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darnet/tensor.hpp"

namespace darnet {

template <typename T>
struct AdamState {
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<Tensor<T>> first_moment;
    std::vector<Tensor<T>> second_moment;
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient. Moments are created on the first call.
template <typename T>
void adam_step(std::span<Var<T>> params, AdamState<T>& state, double lr);

template <typename T>
void zero_grads(std::span<Var<T>> params);

} // namespace darnet
